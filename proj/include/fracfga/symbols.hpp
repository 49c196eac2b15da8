#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fracfga/errors.hpp"

namespace fracfga {

/// Regularized kinetic symbol T^δ(p) = (|p|² + δ²)^{α/2} / α.
struct KineticModel {
    double alpha = 2.0; // fractional exponent, 1 < alpha <= 2
    double delta = 0.0; // regularization, >= 0

    void validate() const {
        if (!(alpha > 1.0 && alpha <= 2.0))
            throw ConfigError("kinetic alpha must be in (1, 2]");
        if (!(delta >= 0.0)) throw ConfigError("kinetic delta must be >= 0");
    }
};

enum class PotentialKind { Zero, Harmonic1DShifted, Cosine1D, Harmonic2DShifted, Custom };

/// Closed-form potential models with exact gradient and Hessian.
struct PotentialModel {
    PotentialKind kind = PotentialKind::Zero;
    std::vector<double> params;

    int custom_dim = 0; // 0 = any dimension
    std::function<double(std::span<const double>)> custom_value;
    std::function<void(std::span<const double>, std::span<double>)> custom_grad;
    std::function<void(std::span<const double>, double*)> custom_hess;
    double custom_grad_bound = std::numeric_limits<double>::infinity();

    static PotentialModel zero();
    static PotentialModel cosine1d();                      // V = 1 + cos(pi x)
    static PotentialModel harmonic1d(double center);       // V = (x-c)^2 / 2
    static PotentialModel harmonic2d(double c0, double c1);// V = |x-c|^2 / 2
    /// Config-file entry point: model selected by name + parameter list.
    static PotentialModel by_name(const std::string& name, const std::vector<double>& params);

    /// Expected spatial dimension, 0 for dimension-agnostic models.
    int dim() const;

    double value(std::span<const double> x) const;
    void grad(std::span<const double> x, std::span<double> out) const;
    /// Hessian, row-major d*d.
    void hess(std::span<const double> x, double* out) const;

    /// sup_x |grad V| over all of space; +inf when unbounded (harmonic).
    double gradient_bound() const;

    /// Known zeros of grad V with each coordinate inside [lo, hi].
    std::vector<std::vector<double>> stationary_points_in(double lo, double hi) const;

private:
    void check_dim(std::size_t got) const;
};

/// Kinetic + potential model pair consumed by the trajectory flow.
struct SymbolSet {
    KineticModel kinetic;
    PotentialModel potential;
};

double kinetic_value(std::span<const double> p, const KineticModel& model);
/// Limit convention: returns 0 at p = 0 when delta = 0 (exists for alpha > 1).
void kinetic_grad(std::span<const double> p, const KineticModel& model, std::span<double> out);
/// Row-major d*d Hessian. Throws when delta = 0, p = 0, alpha < 2: unlike the
/// gradient, the Hessian limit at the origin does not exist there.
void kinetic_hess(std::span<const double> p, const KineticModel& model, double* out);

} // namespace fracfga
