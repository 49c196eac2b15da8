#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>

#include "fracfga/harness.hpp"

namespace fracfga {

namespace {

struct Suite {
    std::ostream& out;
    int failures = 0;

    void check(bool ok, const std::string& name, const std::string& detail = {}) {
        out << (ok ? "[ok]   " : "[FAIL] ") << name;
        if (!detail.empty()) out << "  (" << detail << ")";
        out << "\n";
        if (!ok) ++failures;
    }
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

// 5-point central difference, O(h^4)
template <typename F> double fd_derivative(F&& f, double h) {
    return (f(-2.0 * h) - 8.0 * f(-h) + 8.0 * f(h) - f(2.0 * h)) / (12.0 * h);
}

// finite-difference consistency of the kinetic symbol derivatives
void check_symbol_derivatives(Suite& s) {
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
    std::uniform_real_distribution<double> mag(0.1, 5.0);
    std::uniform_real_distribution<double> alpha_dist(1.05, 2.0);

    double worst_grad = 0.0, worst_hess = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int d = trial % 2 == 0 ? 1 : 2;
        const double delta = trial % 4 < 2 ? 0.0 : 0.1;
        KineticModel kin{alpha_dist(rng), delta};
        double pv[2] = {0.0, 0.0};
        const double r = mag(rng);
        if (d == 1) {
            pv[0] = (trial % 3 == 0 ? -1.0 : 1.0) * r;
        } else {
            const double th = ang(rng);
            pv[0] = r * std::cos(th);
            pv[1] = r * std::sin(th);
        }
        std::span<const double> p(pv, d);
        double grad[2], hess[4];
        kinetic_grad(p, kin, std::span<double>(grad, d));
        kinetic_hess(p, kin, hess);

        double gnorm = 0.0;
        for (int a = 0; a < d; ++a) gnorm += grad[a] * grad[a];
        gnorm = std::sqrt(gnorm);
        const double h = 1e-4 * std::max(1.0, r);
        for (int a = 0; a < d; ++a) {
            const double fd = fd_derivative(
                [&](double dh) {
                    double q[2] = {pv[0], pv[1]};
                    q[a] += dh;
                    return kinetic_value(std::span<const double>(q, d), kin);
                },
                h);
            worst_grad = std::max(worst_grad, std::abs(fd - grad[a]) / std::max(gnorm, 1e-12));
            for (int b = 0; b < d; ++b) {
                const double fdh = fd_derivative(
                    [&](double dh) {
                        double q[2] = {pv[0], pv[1]};
                        q[b] += dh;
                        double g[2];
                        kinetic_grad(std::span<const double>(q, d), kin,
                                     std::span<double>(g, d));
                        return g[a];
                    },
                    h);
                worst_hess = std::max(worst_hess, std::abs(fdh - hess[a * d + b]) /
                                                      std::max(std::abs(hess[a * d + b]), 1.0));
            }
        }
    }
    s.check(worst_grad < 1e-8, "kinetic gradient matches finite differences",
            "worst rel " + fmt(worst_grad));
    s.check(worst_hess < 1e-6, "kinetic Hessian matches finite differences",
            "worst rel " + fmt(worst_hess));

    // potentials: analytic derivatives vs finite differences
    const PotentialModel pots[] = {PotentialModel::cosine1d(), PotentialModel::harmonic1d(0.3),
                                   PotentialModel::harmonic2d(1.0, 1.0)};
    double worst_pot = 0.0;
    std::uniform_real_distribution<double> xdist(-1.5, 1.9);
    for (const PotentialModel& pot : pots) {
        const int d = pot.dim();
        for (int trial = 0; trial < 40; ++trial) {
            double xv[2] = {xdist(rng), xdist(rng)};
            std::span<const double> x(xv, d);
            double grad[2], hess[4];
            pot.grad(x, std::span<double>(grad, d));
            pot.hess(x, hess);
            for (int a = 0; a < d; ++a) {
                const double fd = fd_derivative(
                    [&](double dh) {
                        double q[2] = {xv[0], xv[1]};
                        q[a] += dh;
                        return pot.value(std::span<const double>(q, d));
                    },
                    1e-3);
                worst_pot = std::max(worst_pot, std::abs(fd - grad[a]));
                for (int b = 0; b < d; ++b) {
                    const double fdh = fd_derivative(
                        [&](double dh) {
                            double q[2] = {xv[0], xv[1]};
                            q[b] += dh;
                            double g[2];
                            pot.grad(std::span<const double>(q, d), std::span<double>(g, d));
                            return g[a];
                        },
                        1e-3);
                    worst_pot = std::max(worst_pot, std::abs(fdh - hess[a * d + b]));
                }
            }
        }
    }
    s.check(worst_pot < 1e-6, "potential derivatives match finite differences",
            "worst abs " + fmt(worst_pot));
}

// symplecticity, det Z bound, amplitude-determinant identity, energy drift,
// momentum sandwich along sampled trajectories
void check_trajectory_invariants(Suite& s) {
    const double eps = std::ldexp(1.0, -6);
    std::mt19937 rng(777);
    std::uniform_real_distribution<double> qdist(0.0, 2.0);
    std::uniform_real_distribution<double> pdist(-1.5, 1.5);

    double worst_defect = 0.0, worst_detz = std::numeric_limits<double>::infinity();
    double worst_ampdet = 0.0, worst_energy = 0.0, worst_sandwich = 0.0;

    { // 1-d cosine, the low-regularity case
        SymbolSet sym{KineticModel{1.5, eps}, PotentialModel::cosine1d()};
        const double C = sym.potential.gradient_bound(); // pi
        for (int i = 0; i < 100; ++i) {
            Vec<1> q, p;
            q[0] = qdist(rng);
            p[0] = pdist(rng);
            auto st = TrajectoryState<1>::initial(q, p, Complex(0.0, 0.0));
            const double h0 = hamiltonian<1>(st, sym);
            TrajectoryDiagnostics diag;
            StepSink<1> sink = [&](double t, const TrajectoryState<1>& cur, double, double) {
                const double lo = std::abs(p[0]) - C * t, hi = std::abs(p[0]) + C * t;
                const double P = std::abs(cur.P[0]);
                worst_sandwich = std::max({worst_sandwich, lo - P, P - hi});
            };
            st = integrate_trajectory<1>(st, 0.25, 1e-3, sym, &diag, &sink);
            worst_defect = std::max(worst_defect, diag.max_symplectic_defect);
            worst_detz = std::min(worst_detz, diag.min_abs_det_z);
            worst_energy = std::max(worst_energy, std::abs(hamiltonian<1>(st, sym) - h0));

            const Complex ratio2 = std::exp(2.0 * st.log_amp); // A(0) = e^0
            const Complex dz2 = z_matrix<1>(st.F).determinant() / 2.0;
            worst_ampdet = std::max(worst_ampdet, std::abs(ratio2 - dz2) / std::abs(dz2));
        }
        worst_detz /= std::sqrt(2.0); // normalize against the 2^{d/2} bound
    }
    { // 2-d harmonic
        SymbolSet sym{KineticModel{1.5, eps}, PotentialModel::harmonic2d(1.0, 1.0)};
        double min_dz2 = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 25; ++i) {
            Vec<2> q, p;
            q << qdist(rng), qdist(rng);
            p << pdist(rng), pdist(rng);
            auto st = TrajectoryState<2>::initial(q, p, Complex(0.0, 0.0));
            const double h0 = hamiltonian<2>(st, sym);
            TrajectoryDiagnostics diag;
            st = integrate_trajectory<2>(st, 0.25, 1e-3, sym, &diag);
            worst_defect = std::max(worst_defect, diag.max_symplectic_defect);
            min_dz2 = std::min(min_dz2, diag.min_abs_det_z);
            worst_energy = std::max(worst_energy, std::abs(hamiltonian<2>(st, sym) - h0));
            const Complex ratio2 = std::exp(2.0 * st.log_amp);
            const Complex dz2 = z_matrix<2>(st.F).determinant() / 4.0;
            worst_ampdet = std::max(worst_ampdet, std::abs(ratio2 - dz2) / std::abs(dz2));
        }
        worst_detz = std::min(worst_detz, min_dz2 / 2.0);
    }

    s.check(worst_defect <= 1e-6, "flow Jacobian stays symplectic",
            "max defect " + fmt(worst_defect));
    s.check(worst_detz >= 1.0 - 1e-9, "|det Z| >= 2^{d/2} along trajectories",
            "min ratio " + fmt(worst_detz));
    s.check(worst_ampdet <= 1e-6, "(A/A0)^2 tracks det Z / 2^d",
            "worst rel " + fmt(worst_ampdet));
    s.check(worst_energy <= 1e-6, "H^delta conserved along trajectories",
            "worst drift " + fmt(worst_energy));
    s.check(worst_sandwich <= 1e-9, "|p| - pi t <= |P(t)| <= |p| + pi t",
            "worst excess " + fmt(worst_sandwich));
}

void check_fbi_identities(Suite& s) {
    // isometry on the 1-d benchmark data
    for (int pow : {6, 7}) {
        const double eps = std::ldexp(1.0, -pow);
        const WaveField psi0 = wkb_initial(ExampleCase::Ex1D, eps, example_grid(ExampleCase::Ex1D, pow));
        PhaseMesh<1> mesh = build_phase_mesh<1>(psi0, eps);
        const std::vector<Complex> w = fbi_minus<1>(psi0, mesh, eps);
        double mass = 0.0;
        for (const Complex& v : w) mass += std::norm(v);
        mass *= mesh.cell_volume();
        const double rel = std::abs(std::sqrt(mass) - psi0.norm_l2()) / psi0.norm_l2();
        s.check(rel <= 1e-4, "FBI isometry, 1-d, eps = 2^-" + std::to_string(pow),
                "rel " + fmt(rel));

        WaveField rt = fbi_minus_adjoint<1>(w, mesh, eps, psi0);
        const auto [abs, relrt] = l2_error(rt, psi0);
        (void)abs;
        s.check(relrt <= 1e-3, "FBI round trip, 1-d, eps = 2^-" + std::to_string(pow),
                "rel " + fmt(relrt));
    }
    // 2-d: round trip through the pruned decomposition (identical operator up
    // to the <= 1e-8 pruned mass)
    for (int pow : {6, 7}) {
        const double eps = std::ldexp(1.0, -pow);
        const WaveField psi0 = wkb_initial(ExampleCase::Ex2D, eps, example_grid(ExampleCase::Ex2D, pow));
        PhaseMesh<2> mesh = build_phase_mesh<2>(psi0, eps);
        CutoffSpec cutoff;
        AmplitudeStats stats;
        auto trajs = decompose<2>(psi0, mesh, eps, cutoff, &stats);
        WaveField rt = reconstruct<2>(trajs, psi0, eps, mesh);
        const auto [abs, rel] = l2_error(rt, psi0);
        (void)abs;
        s.check(rel <= 1e-3, "FBI round trip, 2-d, eps = 2^-" + std::to_string(pow),
                "rel " + fmt(rel));
        s.check(stats.pruned_mass_fraction() <= 1e-8, "pruned weight mass negligible, 2-d",
                "fraction " + fmt(stats.pruned_mass_fraction()));
    }
}

void check_spectral(Suite& s) {
    { // norm conservation over a full benchmark run
        const int pow = 6;
        const double eps = std::ldexp(1.0, -pow);
        const WaveField psi0 = wkb_initial(ExampleCase::Ex1D, eps, example_grid(ExampleCase::Ex1D, pow));
        SpectralDiagnostics diag;
        run_reference(psi0, PotentialModel::cosine1d(), eps, 1.5, eps * eps, 0.25, &diag);
        const double drift = std::abs(diag.final_norm - diag.initial_norm) / diag.initial_norm;
        s.check(drift <= 1e-10, "spectral norm conservation", "rel drift " + fmt(drift));
    }
    { // alpha = 2, V = 0: analytic dispersive Gaussian
        const double eps = std::ldexp(1.0, -6);
        WaveField f(1, {-2.0, 0.0}, {2.0, 0.0}, {256, 1});
        const double a0 = std::pow(M_PI * eps, -0.25);
        for (int i = 0; i < f.n[0]; ++i) {
            const double x = f.x(0, i);
            f.values[i] = a0 * std::exp(-x * x / (2.0 * eps));
        }
        const double t = 0.1;
        WaveField num = run_reference(f, PotentialModel::zero(), eps, 2.0, 1e-4, t);
        WaveField exact = f;
        const Complex s1(1.0, t);
        for (int i = 0; i < f.n[0]; ++i) {
            const double x = f.x(0, i);
            exact.values[i] = a0 / std::sqrt(s1) * std::exp(-x * x / (2.0 * eps * s1));
        }
        const auto [abs, rel] = l2_error(num, exact);
        (void)abs;
        s.check(rel <= 1e-8, "free dispersive Gaussian matches analytic solution",
                "rel " + fmt(rel));
    }
}

} // namespace

int run_property_suite(std::ostream& out) {
    Suite s{out};
    check_symbol_derivatives(s);
    check_trajectory_invariants(s);
    check_fbi_identities(s);
    check_spectral(s);
    out << (s.failures == 0 ? "property suite: all checks passed\n"
                            : "property suite: FAILURES\n");
    return s.failures;
}

} // namespace fracfga
