#include "fracfga/symbols.hpp"

#include <cmath>

namespace fracfga {

namespace {
double norm_sq(std::span<const double> p) {
    double s = 0.0;
    for (double v : p) s += v * v;
    return s;
}
} // namespace

double kinetic_value(std::span<const double> p, const KineticModel& m) {
    m.validate();
    return std::pow(norm_sq(p) + m.delta * m.delta, 0.5 * m.alpha) / m.alpha;
}

void kinetic_grad(std::span<const double> p, const KineticModel& m, std::span<double> out) {
    m.validate();
    const double s = norm_sq(p) + m.delta * m.delta;
    if (s == 0.0) {
        // delta = 0 at the origin: the gradient limit is 0 for alpha > 1
        for (auto& v : out) v = 0.0;
        return;
    }
    const double f = std::pow(s, 0.5 * m.alpha - 1.0);
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = f * p[i];
}

void kinetic_hess(std::span<const double> p, const KineticModel& m, double* out) {
    m.validate();
    const std::size_t d = p.size();
    const double s = norm_sq(p) + m.delta * m.delta;
    if (s == 0.0 && m.alpha < 2.0)
        throw Error("kinetic Hessian undefined at p = 0 with delta = 0 and alpha < 2");
    // alpha = 2 is exactly the identity; avoids 0^0 at the origin
    if (m.alpha == 2.0) {
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) out[i * d + j] = (i == j) ? 1.0 : 0.0;
        return;
    }
    const double f1 = std::pow(s, 0.5 * m.alpha - 1.0);
    const double f2 = (m.alpha - 2.0) * std::pow(s, 0.5 * m.alpha - 2.0);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            out[i * d + j] = f2 * p[i] * p[j] + (i == j ? f1 : 0.0);
}

PotentialModel PotentialModel::zero() { return PotentialModel{}; }

PotentialModel PotentialModel::cosine1d() {
    PotentialModel m;
    m.kind = PotentialKind::Cosine1D;
    return m;
}

PotentialModel PotentialModel::harmonic1d(double center) {
    PotentialModel m;
    m.kind = PotentialKind::Harmonic1DShifted;
    m.params = {center};
    return m;
}

PotentialModel PotentialModel::harmonic2d(double c0, double c1) {
    PotentialModel m;
    m.kind = PotentialKind::Harmonic2DShifted;
    m.params = {c0, c1};
    return m;
}

PotentialModel PotentialModel::by_name(const std::string& name,
                                       const std::vector<double>& params) {
    if (name == "zero") return zero();
    if (name == "cosine1d") return cosine1d();
    if (name == "harmonic1d") {
        if (params.size() != 1) throw ConfigError("harmonic1d takes 1 parameter (center)");
        return harmonic1d(params[0]);
    }
    if (name == "harmonic2d") {
        if (params.size() != 2) throw ConfigError("harmonic2d takes 2 parameters (center)");
        return harmonic2d(params[0], params[1]);
    }
    throw ConfigError("unknown potential model '" + name + "'");
}

int PotentialModel::dim() const {
    switch (kind) {
    case PotentialKind::Zero: return 0;
    case PotentialKind::Cosine1D:
    case PotentialKind::Harmonic1DShifted: return 1;
    case PotentialKind::Harmonic2DShifted: return 2;
    case PotentialKind::Custom: return custom_dim;
    }
    return 0;
}

void PotentialModel::check_dim(std::size_t got) const {
    const int want = dim();
    if (want != 0 && static_cast<std::size_t>(want) != got)
        throw GridMismatchError("potential model expects dimension " + std::to_string(want) +
                                ", got " + std::to_string(got));
}

double PotentialModel::value(std::span<const double> x) const {
    check_dim(x.size());
    switch (kind) {
    case PotentialKind::Zero:
        return 0.0;
    case PotentialKind::Cosine1D:
        return 1.0 + std::cos(M_PI * x[0]);
    case PotentialKind::Harmonic1DShifted: {
        const double u = x[0] - params[0];
        return 0.5 * u * u;
    }
    case PotentialKind::Harmonic2DShifted: {
        const double u = x[0] - params[0], v = x[1] - params[1];
        return 0.5 * (u * u + v * v);
    }
    case PotentialKind::Custom:
        return custom_value(x);
    }
    return 0.0;
}

void PotentialModel::grad(std::span<const double> x, std::span<double> out) const {
    check_dim(x.size());
    switch (kind) {
    case PotentialKind::Zero:
        for (auto& v : out) v = 0.0;
        return;
    case PotentialKind::Cosine1D:
        out[0] = -M_PI * std::sin(M_PI * x[0]);
        return;
    case PotentialKind::Harmonic1DShifted:
        out[0] = x[0] - params[0];
        return;
    case PotentialKind::Harmonic2DShifted:
        out[0] = x[0] - params[0];
        out[1] = x[1] - params[1];
        return;
    case PotentialKind::Custom:
        custom_grad(x, out);
        return;
    }
}

void PotentialModel::hess(std::span<const double> x, double* out) const {
    check_dim(x.size());
    const std::size_t d = x.size();
    switch (kind) {
    case PotentialKind::Zero:
        for (std::size_t i = 0; i < d * d; ++i) out[i] = 0.0;
        return;
    case PotentialKind::Cosine1D:
        out[0] = -M_PI * M_PI * std::cos(M_PI * x[0]);
        return;
    case PotentialKind::Harmonic1DShifted:
        out[0] = 1.0;
        return;
    case PotentialKind::Harmonic2DShifted:
        out[0] = 1.0;
        out[1] = 0.0;
        out[2] = 0.0;
        out[3] = 1.0;
        return;
    case PotentialKind::Custom:
        custom_hess(x, out);
        return;
    }
}

double PotentialModel::gradient_bound() const {
    switch (kind) {
    case PotentialKind::Zero: return 0.0;
    case PotentialKind::Cosine1D: return M_PI;
    case PotentialKind::Harmonic1DShifted:
    case PotentialKind::Harmonic2DShifted:
        return std::numeric_limits<double>::infinity();
    case PotentialKind::Custom: return custom_grad_bound;
    }
    return std::numeric_limits<double>::infinity();
}

std::vector<std::vector<double>> PotentialModel::stationary_points_in(double lo,
                                                                      double hi) const {
    std::vector<std::vector<double>> pts;
    switch (kind) {
    case PotentialKind::Cosine1D:
        // sin(pi x) = 0 at integer x
        for (double k = std::ceil(lo); k <= hi; k += 1.0) pts.push_back({k});
        break;
    case PotentialKind::Harmonic1DShifted:
        if (params[0] >= lo && params[0] <= hi) pts.push_back({params[0]});
        break;
    case PotentialKind::Harmonic2DShifted:
        if (params[0] >= lo && params[0] <= hi && params[1] >= lo && params[1] <= hi)
            pts.push_back({params[0], params[1]});
        break;
    default:
        break;
    }
    return pts;
}

} // namespace fracfga
