#include "fracfga/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstdio>
#include <mutex>
#include <vector>

namespace fracfga {

namespace {
// FFTW planning is not thread-safe; execution is.
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

int freq_index(int m, int n) { return m < n / 2 ? m : m - n; }
} // namespace

Complex kinetic_phase(std::span<const double> khat, double eps, double alpha, double dt) {
    double kk = 0.0;
    for (double k : khat) kk += k * k;
    const double mag = std::pow(kk, 0.5 * alpha);
    const double phase = -dt * std::pow(eps, alpha - 1.0) * mag / alpha;
    return Complex(std::cos(phase), std::sin(phase));
}

struct SpectralSolver::Impl {
    int dims;
    std::array<int, 2> n;
    fftw_plan fwd = nullptr, bwd = nullptr;
    std::vector<Complex> work;
    std::vector<Complex> kin; // kinetic multiplier per Fourier mode
    std::vector<Complex> pot; // half-step potential phase per grid point
    double inv_count;

    ~Impl() {
        std::lock_guard<std::mutex> lock(plan_mutex());
        if (fwd) fftw_destroy_plan(fwd);
        if (bwd) fftw_destroy_plan(bwd);
    }
};

SpectralSolver::SpectralSolver(const WaveField& g, const PotentialModel& potential,
                               double eps, double alpha, double dt)
    : impl_(std::make_unique<Impl>()) {
    g.validate();
    impl_->dims = g.dims;
    impl_->n = g.n;
    const std::size_t count = static_cast<std::size_t>(g.n[0]) * g.n[1];
    impl_->work.resize(count);
    impl_->inv_count = 1.0 / static_cast<double>(count);

    auto* buf = reinterpret_cast<fftw_complex*>(impl_->work.data());
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        if (g.dims == 1)
            impl_->fwd = fftw_plan_dft_1d(g.n[0], buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
        else
            impl_->fwd = fftw_plan_dft_2d(g.n[0], g.n[1], buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
        if (g.dims == 1)
            impl_->bwd = fftw_plan_dft_1d(g.n[0], buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
        else
            impl_->bwd = fftw_plan_dft_2d(g.n[0], g.n[1], buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    }

    impl_->kin.resize(count);
    const double two_pi = 2.0 * M_PI;
    std::array<double, 2> dk{0.0, 0.0};
    for (int a = 0; a < g.dims; ++a) dk[a] = two_pi / (g.box_hi[a] - g.box_lo[a]);
    for (int i0 = 0; i0 < g.n[0]; ++i0) {
        const double k0 = dk[0] * freq_index(i0, g.n[0]);
        for (int i1 = 0; i1 < g.n[1]; ++i1) {
            double kv[2] = {k0, 0.0};
            int nd = 1;
            if (g.dims == 2) {
                kv[1] = dk[1] * freq_index(i1, g.n[1]);
                nd = 2;
            }
            impl_->kin[g.index(i0, i1)] =
                kinetic_phase(std::span<const double>(kv, nd), eps, alpha, dt);
        }
    }

    impl_->pot.resize(count);
    for (int i0 = 0; i0 < g.n[0]; ++i0) {
        for (int i1 = 0; i1 < g.n[1]; ++i1) {
            double xv[2] = {g.x(0, i0), g.dims == 2 ? g.x(1, i1) : 0.0};
            const double v = potential.value(std::span<const double>(xv, g.dims));
            const double phase = -v * dt / (2.0 * eps);
            impl_->pot[g.index(i0, i1)] = Complex(std::cos(phase), std::sin(phase));
        }
    }
}

SpectralSolver::~SpectralSolver() = default;

void SpectralSolver::step(WaveField& f) {
    Impl& s = *impl_;
    if (f.n != s.n || f.dims != s.dims)
        throw GridMismatchError("field does not match solver grid");
    const std::size_t count = f.values.size();
    for (std::size_t i = 0; i < count; ++i) s.work[i] = s.pot[i] * f.values[i];
    fftw_execute(s.fwd);
    for (std::size_t i = 0; i < count; ++i) s.work[i] *= s.kin[i];
    fftw_execute(s.bwd);
    for (std::size_t i = 0; i < count; ++i)
        f.values[i] = s.pot[i] * (s.work[i] * s.inv_count);
}

double SpectralSolver::boundary_mass_fraction(const WaveField& f) const {
    double edge = 0.0, total = 0.0;
    for (int i0 = 0; i0 < f.n[0]; ++i0) {
        const bool b0 = (i0 == 0 || i0 == f.n[0] - 1);
        for (int i1 = 0; i1 < f.n[1]; ++i1) {
            const double m = std::norm(f.values[f.index(i0, i1)]);
            total += m;
            const bool b1 = f.dims == 2 && (i1 == 0 || i1 == f.n[1] - 1);
            if (b0 || b1) edge += m;
        }
    }
    return total > 0.0 ? edge / total : 0.0;
}

WaveField strang_step(const WaveField& field, const PotentialModel& potential, double eps,
                      double alpha, double dt) {
    SpectralSolver solver(field, potential, eps, alpha, dt);
    WaveField out = field;
    solver.step(out);
    return out;
}

WaveField run_reference(const WaveField& psi0, const PotentialModel& potential, double eps,
                        double alpha, double dt, double t_final, SpectralDiagnostics* diag,
                        double boundary_tol) {
    if (!(t_final >= 0.0)) throw ConfigError("t_final must be >= 0");
    WaveField f = psi0;
    SpectralDiagnostics local;
    SpectralDiagnostics& d = diag ? *diag : local;
    d.initial_norm = f.norm_l2();
    if (t_final == 0.0) {
        d.final_norm = d.initial_norm;
        return f;
    }
    if (!(dt > 0.0)) throw ConfigError("dt must be > 0");

    SpectralSolver solver(psi0, potential, eps, alpha, dt);
    const long nfull = static_cast<long>(std::floor(t_final / dt + 1e-9));
    const double rest = t_final - nfull * dt;
    const long check_every = std::max<long>(1, nfull / 64);
    for (long i = 0; i < nfull; ++i) {
        solver.step(f);
        ++d.steps;
        if (i % check_every == 0 || i == nfull - 1) {
            const double frac = solver.boundary_mass_fraction(f);
            d.max_boundary_mass_fraction = std::max(d.max_boundary_mass_fraction, frac);
        }
    }
    if (rest > 1e-12 * t_final) {
        SpectralSolver tail(psi0, potential, eps, alpha, rest);
        tail.step(f);
        ++d.steps;
    }
    d.final_norm = f.norm_l2();
    if (d.max_boundary_mass_fraction > boundary_tol) {
        d.boundary_warning = true;
        std::fprintf(stderr,
                     "warning: boundary mass fraction %.3e exceeds %.3e; periodic wrap "
                     "may contaminate the reference\n",
                     d.max_boundary_mass_fraction, boundary_tol);
    }
    return f;
}

} // namespace fracfga
