#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "fracfga/errors.hpp"

namespace fracfga {

using Complex = std::complex<double>;

/// Complex wavefunction samples on a uniform periodic grid in d = 1 or 2
/// dimensions. Samples sit at x_i = lo + i*dx with the right endpoint
/// excluded (periodic convention), row-major in 2-d.
struct WaveField {
    int dims = 1;
    std::array<double, 2> box_lo{0.0, 0.0};
    std::array<double, 2> box_hi{0.0, 0.0};
    std::array<int, 2> n{0, 1}; // samples per dim; n[1] == 1 in 1-d
    std::vector<Complex> values;

    WaveField() = default;
    WaveField(int d, std::array<double, 2> lo, std::array<double, 2> hi,
              std::array<int, 2> samples);

    double dx(int axis) const { return (box_hi[axis] - box_lo[axis]) / n[axis]; }
    double x(int axis, int i) const { return box_lo[axis] + i * dx(axis); }
    std::size_t size() const { return values.size(); }
    std::size_t index(int i0, int i1 = 0) const {
        return static_cast<std::size_t>(i0) * n[1] + i1;
    }
    /// Grid cell volume Δx^d.
    double cell_volume() const;

    bool same_grid(const WaveField& other) const;

    /// Discrete L² norm sqrt(Σ|ψ|² Δx^d).
    double norm_l2() const;
    double mass() const; // norm squared

    static bool power_of_two(int m) { return m > 0 && (m & (m - 1)) == 0; }
    void validate() const;
};

/// abs = sqrt(Σ|a-b|² Δx^d), rel = abs / ||b||. Grids must match.
/// rel is +inf when b vanishes but a does not, and 0 when both vanish.
std::pair<double, double> l2_error(const WaveField& a, const WaveField& b);

/// 1-d: CSV rows "x,re,im". 2-d: raw little-endian (re,im) doubles in
/// row-major order to <path>.bin plus grid metadata to <path>.csv.
void save_field(const WaveField& f, const std::string& path_stem);

/// Raw binary snapshot (grid header + values), used by the reference cache.
void save_field_binary(const WaveField& f, const std::string& path);
WaveField load_field_binary(const std::string& path);

} // namespace fracfga
