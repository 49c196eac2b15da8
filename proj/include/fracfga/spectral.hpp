#pragma once

#include <complex>
#include <memory>
#include <span>

#include "fracfga/symbols.hpp"
#include "fracfga/wavefield.hpp"

namespace fracfga {

/// One-step Fourier multiplier of the kinetic flow on the periodic box:
/// exp(-i dt eps^{alpha-1} |khat|^alpha / alpha) for angular wavenumber khat.
Complex kinetic_phase(std::span<const double> khat, double eps, double alpha, double dt);

struct SpectralDiagnostics {
    double initial_norm = 0.0;
    double final_norm = 0.0;
    double max_boundary_mass_fraction = 0.0;
    bool boundary_warning = false;
    long steps = 0;
};

/// Strang splitting stepper for i eps d_t psi = T^(-i eps d_x) psi + V psi on a
/// periodic box: half potential phase, kinetic multiplier in Fourier space,
/// half potential phase. Owns the FFT plans and precomputed phase tables; one
/// instance drives one run (single control thread), several instances may run
/// concurrently.
class SpectralSolver {
public:
    SpectralSolver(const WaveField& grid_template, const PotentialModel& potential,
                   double eps, double alpha, double dt);
    ~SpectralSolver();
    SpectralSolver(const SpectralSolver&) = delete;
    SpectralSolver& operator=(const SpectralSolver&) = delete;

    void step(WaveField& field);
    /// Mass fraction in the outermost grid layer; the whole-space problem is
    /// only faithfully represented while this stays negligible.
    double boundary_mass_fraction(const WaveField& field) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Single Strang step (convenience wrapper; builds plans each call).
WaveField strang_step(const WaveField& field, const PotentialModel& potential, double eps,
                      double alpha, double dt);

/// Repeated Strang steps to t_final with fixed dt (default eps^2 chosen by the
/// caller). Emits a boundary-contamination warning in diag when the outer-layer
/// mass exceeds `boundary_tol` at any checkpoint.
WaveField run_reference(const WaveField& psi0, const PotentialModel& potential, double eps,
                        double alpha, double dt, double t_final,
                        SpectralDiagnostics* diag = nullptr, double boundary_tol = 1e-10);

} // namespace fracfga
