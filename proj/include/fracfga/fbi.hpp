#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "fracfga/flow.hpp"
#include "fracfga/parallel.hpp"
#include "fracfga/wavefield.hpp"

namespace fracfga {

/// Gaussian-window tail tolerance; windows are truncated at radius
/// R = sqrt(2 eps ln(1/tau)) so the discarded tail sits below round-off.
inline constexpr double kWindowTail = 1e-12;

inline double window_radius(double eps) {
    return std::sqrt(2.0 * eps * std::log(1.0 / kWindowTail));
}

/// Uniform (q, p) lattice with cell-centered nodes: q = q_lo + (i + 1/2) dq.
/// Nodes are flattened q-major: node = iq * p_count() + ip, with the q and p
/// multi-indices themselves row-major.
template <int D> struct PhaseMesh {
    std::array<double, D> q_lo{}, p_lo{};
    double dq = 0.0, dp = 0.0;
    std::array<int, D> nq{}, np{};
    std::vector<char> active; // set by initial_amplitudes

    std::size_t q_count() const {
        std::size_t c = 1;
        for (int a = 0; a < D; ++a) c *= nq[a];
        return c;
    }
    std::size_t p_count() const {
        std::size_t c = 1;
        for (int a = 0; a < D; ++a) c *= np[a];
        return c;
    }
    std::size_t node_count() const { return q_count() * p_count(); }

    Vec<D> q_node(std::size_t iq) const {
        Vec<D> q;
        for (int a = D - 1; a >= 0; --a) {
            q[a] = q_lo[a] + (static_cast<double>(iq % nq[a]) + 0.5) * dq;
            iq /= nq[a];
        }
        return q;
    }
    Vec<D> p_node(std::size_t ip) const {
        Vec<D> p;
        for (int a = D - 1; a >= 0; --a) {
            p[a] = p_lo[a] + (static_cast<double>(ip % np[a]) + 0.5) * dp;
            ip /= np[a];
        }
        return p;
    }
    double cell_volume() const { return std::pow(dq * dp, D); }
};

/// Phase-space cutoff. MassThreshold keeps nodes with |A| above
/// prune_tol * max|A|; ChiOmega additionally multiplies by the smooth bump
/// that is 1 on K_omega and 0 outside K_{omega/2}.
struct CutoffSpec {
    enum class Mode { Off, MassThreshold, ChiOmega };
    Mode mode = Mode::MassThreshold;
    double omega = 0.0;
    std::vector<std::vector<double>> stationary_points; // zeros of grad V
    double prune_tol = 1e-7;

    void validate() const {
        if (mode == Mode::ChiOmega && !(omega > 0.0))
            throw ConfigError("chi_omega cutoff requires omega > 0");
    }
};

namespace detail {
// quintic smoothstep: C^2, monotone, 0 at u<=0, 1 at u>=1
inline double smoothstep5(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}
} // namespace detail

/// Smooth bump chi_omega(q, p): 1 inside the ball |q|^2 + |p|^2 <= 1/omega^2
/// and outside every excluded ball of radius omega around a stationary point,
/// 0 beyond radius 2/omega or inside an excluded ball of radius omega/2,
/// quintic in each transition shell.
inline double chi_omega(std::span<const double> q, std::span<const double> p,
                        const CutoffSpec& spec) {
    if (spec.mode != CutoffSpec::Mode::ChiOmega)
        throw ConfigError("chi_omega requires the ChiOmega cutoff mode");
    spec.validate();
    double r2 = 0.0;
    for (double v : q) r2 += v * v;
    for (double v : p) r2 += v * v;
    const double r = std::sqrt(r2);
    const double r_in = 1.0 / spec.omega, r_out = 2.0 / spec.omega;
    double chi = detail::smoothstep5((r_out - r) / (r_out - r_in));
    for (const auto& q0 : spec.stationary_points) {
        double rho2 = 0.0;
        for (std::size_t a = 0; a < q.size(); ++a) {
            const double dqa = q[a] - (a < q0.size() ? q0[a] : 0.0);
            rho2 += dqa * dqa;
        }
        for (double v : p) rho2 += v * v;
        const double rho = std::sqrt(rho2);
        chi *= detail::smoothstep5((rho - 0.5 * spec.omega) / (0.5 * spec.omega));
    }
    return chi;
}

namespace detail {

inline void check_resolution(const WaveField& f, double eps) {
    for (int a = 0; a < f.dims; ++a)
        if (f.dx(a) > eps * (1.0 + 1e-9))
            throw ResolutionError("grid spacing " + std::to_string(f.dx(a)) +
                                  " exceeds eps = " + std::to_string(eps));
}

struct Window {
    int lo = 0, hi = -1; // inclusive grid index range; empty when hi < lo
    int size() const { return hi - lo + 1; }
};

inline Window window_indices(double center, double radius, double grid_lo, double dx, int n) {
    Window w;
    w.lo = std::max(0, static_cast<int>(std::ceil((center - radius - grid_lo) / dx)));
    w.hi = std::min(n - 1, static_cast<int>(std::floor((center + radius - grid_lo) / dx)));
    return w;
}

/// exp(-i p x / eps) over the full grid axis, one row per p node value.
inline std::vector<Complex> phase_table(const WaveField& f, int axis,
                                        std::span<const double> p_values, double eps) {
    const int n = f.n[axis];
    std::vector<Complex> t(p_values.size() * n);
    for (std::size_t ip = 0; ip < p_values.size(); ++ip)
        for (int j = 0; j < n; ++j) {
            const double ph = -p_values[ip] * f.x(axis, j) / eps;
            t[ip * n + j] = Complex(std::cos(ph), std::sin(ph));
        }
    return t;
}

} // namespace detail

/// Windowed integral pref * Int psi(x) e^{-i p (x-q)/eps - |x-q|^2/(2 eps)} dx
/// at a single phase-space point (trapezoid on the field grid).
template <int D>
Complex fbi_point(const WaveField& f, const Vec<D>& q, const Vec<D>& p, double eps,
                  double pref) {
    const double R = window_radius(eps);
    detail::Window w[2];
    for (int a = 0; a < D; ++a) {
        w[a] = detail::window_indices(q[a], R, f.box_lo[a], f.dx(a), f.n[a]);
        if (w[a].size() <= 0) return Complex(0.0, 0.0);
    }
    const double inv2e = 1.0 / (2.0 * eps);
    Complex acc(0.0, 0.0);
    if constexpr (D == 1) {
        for (int j = w[0].lo; j <= w[0].hi; ++j) {
            const double u = f.x(0, j) - q[0];
            const double g = std::exp(-u * u * inv2e);
            const double ph = -p[0] * u / eps;
            acc += f.values[j] * (g * Complex(std::cos(ph), std::sin(ph)));
        }
    } else {
        for (int j0 = w[0].lo; j0 <= w[0].hi; ++j0) {
            const double u0 = f.x(0, j0) - q[0];
            const double g0 = std::exp(-u0 * u0 * inv2e);
            const double ph0 = -p[0] * u0 / eps;
            const Complex c0 = g0 * Complex(std::cos(ph0), std::sin(ph0));
            Complex row(0.0, 0.0);
            for (int j1 = w[1].lo; j1 <= w[1].hi; ++j1) {
                const double u1 = f.x(1, j1) - q[1];
                const double g1 = std::exp(-u1 * u1 * inv2e);
                const double ph1 = -p[1] * u1 / eps;
                row += f.values[f.index(j0, j1)] * (g1 * Complex(std::cos(ph1), std::sin(ph1)));
            }
            acc += c0 * row;
        }
    }
    return pref * f.cell_volume() * acc;
}

namespace detail {

/// Shared windowed-quadrature core for the phase-space transforms. Computes
/// pref * Int psi e^{-ip(x-q)/eps - |x-q|^2/(2 eps)} dx on every mesh node.
/// q-blocks whose |psi|-weighted window bound falls below skip_rel times the
/// largest block scale contribute provably less than that fraction of the
/// global maximum and are emitted as exact zeros.
template <int D>
std::vector<Complex> phase_space_transform(const WaveField& f, const PhaseMesh<D>& mesh,
                                           double eps, double pref, double skip_rel,
                                           int workers) {
    check_resolution(f, eps);
    const double R = window_radius(eps);
    const double inv2e = 1.0 / (2.0 * eps);
    const std::size_t nq_total = mesh.q_count();
    const std::size_t np_total = mesh.p_count();
    const double vol = f.cell_volume();

    // per-axis p node values and phase tables over the full grid
    std::array<std::vector<double>, D> pvals;
    std::array<std::vector<Complex>, D> ptab;
    for (int a = 0; a < D; ++a) {
        pvals[a].resize(mesh.np[a]);
        for (int i = 0; i < mesh.np[a]; ++i) pvals[a][i] = mesh.p_lo[a] + (i + 0.5) * mesh.dp;
        ptab[a] = phase_table(f, a, pvals[a], eps);
    }

    // bound pass: s_q >= |value(q, p)| for every p
    std::vector<double> bound(nq_total, 0.0);
    parallel_chunks(nq_total, workers, [&](std::size_t b, std::size_t e, int) {
        for (std::size_t iq = b; iq < e; ++iq) {
            const Vec<D> q = mesh.q_node(iq);
            Window w[2];
            bool empty = false;
            for (int a = 0; a < D; ++a) {
                w[a] = window_indices(q[a], R, f.box_lo[a], f.dx(a), f.n[a]);
                if (w[a].size() <= 0) empty = true;
            }
            if (empty) continue;
            double s = 0.0;
            if constexpr (D == 1) {
                for (int j = w[0].lo; j <= w[0].hi; ++j) {
                    const double u = f.x(0, j) - q[0];
                    s += std::abs(f.values[j]) * std::exp(-u * u * inv2e);
                }
            } else {
                for (int j0 = w[0].lo; j0 <= w[0].hi; ++j0) {
                    const double u0 = f.x(0, j0) - q[0];
                    const double g0 = std::exp(-u0 * u0 * inv2e);
                    double row = 0.0;
                    for (int j1 = w[1].lo; j1 <= w[1].hi; ++j1) {
                        const double u1 = f.x(1, j1) - q[1];
                        row += std::abs(f.values[f.index(j0, j1)]) * std::exp(-u1 * u1 * inv2e);
                    }
                    s += g0 * row;
                }
            }
            bound[iq] = std::abs(pref) * vol * s;
        }
    });
    const double bound_max = *std::max_element(bound.begin(), bound.end());
    const double skip_below = skip_rel * bound_max;

    std::vector<Complex> out(mesh.node_count(), Complex(0.0, 0.0));
    parallel_chunks(nq_total, workers, [&](std::size_t b, std::size_t e, int) {
        std::vector<Complex> inner; // 2-d partial sums, reused across q nodes
        for (std::size_t iq = b; iq < e; ++iq) {
            if (bound[iq] <= skip_below || bound[iq] == 0.0) continue;
            const Vec<D> q = mesh.q_node(iq);
            Window w[2];
            for (int a = 0; a < D; ++a)
                w[a] = window_indices(q[a], R, f.box_lo[a], f.dx(a), f.n[a]);
            Complex* block = out.data() + iq * np_total;

            if constexpr (D == 1) {
                const int n0 = f.n[0];
                std::vector<Complex> fg(w[0].size());
                for (int j = w[0].lo; j <= w[0].hi; ++j) {
                    const double u = f.x(0, j) - q[0];
                    fg[j - w[0].lo] = f.values[j] * std::exp(-u * u * inv2e);
                }
                for (int ip = 0; ip < mesh.np[0]; ++ip) {
                    const Complex* ph = ptab[0].data() + static_cast<std::size_t>(ip) * n0;
                    Complex acc(0.0, 0.0);
                    for (int j = w[0].lo; j <= w[0].hi; ++j) acc += fg[j - w[0].lo] * ph[j];
                    const double qph = pvals[0][ip] * q[0] / eps;
                    block[ip] = pref * vol * acc * Complex(std::cos(qph), std::sin(qph));
                }
            } else {
                const int n0 = f.n[0], n1 = f.n[1];
                const int w0 = w[0].size(), w1 = w[1].size();
                std::vector<Complex> fg1(static_cast<std::size_t>(w0) * w1);
                std::vector<double> gauss1(w1);
                for (int j1 = w[1].lo; j1 <= w[1].hi; ++j1) {
                    const double u1 = f.x(1, j1) - q[1];
                    gauss1[j1 - w[1].lo] = std::exp(-u1 * u1 * inv2e);
                }
                for (int j0 = w[0].lo; j0 <= w[0].hi; ++j0)
                    for (int j1 = w[1].lo; j1 <= w[1].hi; ++j1)
                        fg1[static_cast<std::size_t>(j0 - w[0].lo) * w1 + (j1 - w[1].lo)] =
                            f.values[f.index(j0, j1)] * gauss1[j1 - w[1].lo];

                // stage 1: contract the inner axis against its phase table
                inner.assign(static_cast<std::size_t>(mesh.np[1]) * w0, Complex(0.0, 0.0));
                for (int ip1 = 0; ip1 < mesh.np[1]; ++ip1) {
                    const Complex* ph1 = ptab[1].data() + static_cast<std::size_t>(ip1) * n1;
                    Complex* row = inner.data() + static_cast<std::size_t>(ip1) * w0;
                    for (int j0 = 0; j0 < w0; ++j0) {
                        const Complex* frow = fg1.data() + static_cast<std::size_t>(j0) * w1;
                        Complex acc(0.0, 0.0);
                        for (int j1 = 0; j1 < w1; ++j1) acc += frow[j1] * ph1[w[1].lo + j1];
                        row[j0] = acc;
                    }
                }
                // stage 2: contract the outer axis, Gaussian-weighted
                std::vector<Complex> g0ph(static_cast<std::size_t>(mesh.np[0]) * w0);
                std::vector<double> gauss0(w0);
                for (int j0 = 0; j0 < w0; ++j0) {
                    const double u0 = f.x(0, w[0].lo + j0) - q[0];
                    gauss0[j0] = std::exp(-u0 * u0 * inv2e);
                }
                for (int ip0 = 0; ip0 < mesh.np[0]; ++ip0) {
                    const Complex* ph0 = ptab[0].data() + static_cast<std::size_t>(ip0) * n0;
                    for (int j0 = 0; j0 < w0; ++j0)
                        g0ph[static_cast<std::size_t>(ip0) * w0 + j0] =
                            gauss0[j0] * ph0[w[0].lo + j0];
                }
                for (int ip0 = 0; ip0 < mesh.np[0]; ++ip0) {
                    const Complex* gp = g0ph.data() + static_cast<std::size_t>(ip0) * w0;
                    const double qph0 = pvals[0][ip0] * q[0] / eps;
                    const Complex eq0 = Complex(std::cos(qph0), std::sin(qph0));
                    for (int ip1 = 0; ip1 < mesh.np[1]; ++ip1) {
                        const Complex* row = inner.data() + static_cast<std::size_t>(ip1) * w0;
                        Complex acc(0.0, 0.0);
                        for (int j0 = 0; j0 < w0; ++j0) acc += gp[j0] * row[j0];
                        const double qph1 = pvals[1][ip1] * q[1] / eps;
                        block[static_cast<std::size_t>(ip0) * mesh.np[1] + ip1] =
                            pref * vol * acc * eq0 * Complex(std::cos(qph1), std::sin(qph1));
                    }
                }
            }
        }
    });
    return out;
}

} // namespace detail

/// FBI transform F_-: pref 2^{-d/2} (pi eps)^{-3d/4} against the Gaussian
/// window, evaluated on every mesh node by windowed trapezoid quadrature.
template <int D>
std::vector<Complex> fbi_minus(const WaveField& f, const PhaseMesh<D>& mesh, double eps,
                               int workers = 0) {
    if (workers <= 0) workers = default_workers();
    const double pref = std::pow(2.0, -0.5 * D) * std::pow(M_PI * eps, -0.75 * D);
    return detail::phase_space_transform<D>(f, mesh, eps, pref, 1e-15, workers);
}

/// Gaussian superposition Sum_k coeff_k e^{i P_k (x - Q_k)/eps - |x-Q_k|^2/(2 eps)}
/// accumulated onto the target grid. Terms are consumed in index order within
/// fixed contiguous chunks and per-worker partial grids are merged in worker
/// order, so output bits depend only on (terms, grid, workers).
template <int D> struct GaussianTerm {
    Vec<D> center;
    Vec<D> momentum;
    Complex coeff;
};

template <int D>
void accumulate_gaussians(std::span<const GaussianTerm<D>> terms, double eps,
                          WaveField& grid, int workers = 0) {
    if (workers <= 0) workers = default_workers();
    const double R = window_radius(eps);
    const double inv2e = 1.0 / (2.0 * eps);
    const std::size_t count = grid.values.size();

    std::vector<std::vector<Complex>> partial(std::max(1, workers));
    for (auto& b : partial) b.assign(count, Complex(0.0, 0.0));

    parallel_chunks(terms.size(), workers, [&](std::size_t b, std::size_t e, int w) {
        std::vector<Complex>& acc = partial[w];
        std::vector<Complex> u0, u1;
        for (std::size_t t = b; t < e; ++t) {
            const GaussianTerm<D>& g = terms[t];
            detail::Window win[2];
            bool empty = false;
            for (int a = 0; a < D; ++a) {
                win[a] = detail::window_indices(g.center[a], R, grid.box_lo[a], grid.dx(a),
                                                grid.n[a]);
                if (win[a].size() <= 0) empty = true;
            }
            if (empty) continue;
            if constexpr (D == 1) {
                for (int j = win[0].lo; j <= win[0].hi; ++j) {
                    const double u = grid.x(0, j) - g.center[0];
                    const double ph = g.momentum[0] * u / eps;
                    acc[j] += g.coeff * std::exp(-u * u * inv2e) *
                              Complex(std::cos(ph), std::sin(ph));
                }
            } else {
                const int w0 = win[0].size(), w1 = win[1].size();
                u0.resize(w0);
                u1.resize(w1);
                for (int j = 0; j < w0; ++j) {
                    const double u = grid.x(0, win[0].lo + j) - g.center[0];
                    const double ph = g.momentum[0] * u / eps;
                    u0[j] = std::exp(-u * u * inv2e) * Complex(std::cos(ph), std::sin(ph));
                }
                for (int j = 0; j < w1; ++j) {
                    const double u = grid.x(1, win[1].lo + j) - g.center[1];
                    const double ph = g.momentum[1] * u / eps;
                    u1[j] = std::exp(-u * u * inv2e) * Complex(std::cos(ph), std::sin(ph));
                }
                for (int j0 = 0; j0 < w0; ++j0) {
                    const Complex c0 = g.coeff * u0[j0];
                    Complex* row = acc.data() + grid.index(win[0].lo + j0, win[1].lo);
                    for (int j1 = 0; j1 < w1; ++j1) row[j1] += c0 * u1[j1];
                }
            }
        }
    });

    // ordered merge keeps the result independent of scheduling
    for (const auto& buf : partial)
        for (std::size_t i = 0; i < count; ++i) grid.values[i] += buf[i];
}

/// Quadrature pseudo-inverse (F_-)^*: maps phase-space weights back to a field
/// on out_grid's lattice (values of out_grid are ignored).
template <int D>
WaveField fbi_minus_adjoint(std::span<const Complex> weights, const PhaseMesh<D>& mesh,
                            double eps, const WaveField& out_grid, int workers = 0) {
    if (weights.size() != mesh.node_count())
        throw GridMismatchError("weight count does not match mesh");
    const double pref = std::pow(2.0, -0.5 * D) * std::pow(M_PI * eps, -0.75 * D);
    const double vol = mesh.cell_volume();
    const std::size_t np_total = mesh.p_count();

    std::vector<GaussianTerm<D>> terms;
    terms.reserve(weights.size());
    for (std::size_t node = 0; node < weights.size(); ++node) {
        if (weights[node] == Complex(0.0, 0.0)) continue;
        GaussianTerm<D> g;
        g.center = mesh.q_node(node / np_total);
        g.momentum = mesh.p_node(node % np_total);
        g.coeff = pref * vol * weights[node];
        terms.push_back(g);
    }
    WaveField out(out_grid.dims, out_grid.box_lo, out_grid.box_hi, out_grid.n);
    accumulate_gaussians<D>(std::span<const GaussianTerm<D>>(terms), eps, out, workers);
    return out;
}

struct AmplitudeStats {
    double max_abs = 0.0;
    std::size_t active_count = 0;
    double total_weight_mass = 0.0;  // Sum |A|^2 over all nodes
    double pruned_weight_mass = 0.0; // Sum |A|^2 over pruned nodes
    double pruned_mass_fraction() const {
        return total_weight_mass > 0.0 ? pruned_weight_mass / total_weight_mass : 0.0;
    }
};

/// Initial trajectory weights A(0,q,p) = 2^{d/2} (2 pi eps)^{-3d/2} times the
/// windowed FBI integral of psi0, with the cutoff applied and the active mask
/// filled in. Throws EmptyActiveSetError when everything is pruned.
template <int D>
std::vector<Complex> initial_amplitudes(const WaveField& psi0, PhaseMesh<D>& mesh, double eps,
                                        const CutoffSpec& cutoff, AmplitudeStats* stats = nullptr,
                                        int workers = 0) {
    if (workers <= 0) workers = default_workers();
    cutoff.validate();
    const double pref =
        std::pow(2.0, 0.5 * D) * std::pow(2.0 * M_PI * eps, -1.5 * D);
    const double skip_rel =
        cutoff.mode == CutoffSpec::Mode::Off ? 1e-15 : 0.5 * cutoff.prune_tol;
    std::vector<Complex> amps =
        detail::phase_space_transform<D>(psi0, mesh, eps, pref, skip_rel, workers);

    const std::size_t np_total = mesh.p_count();
    if (cutoff.mode == CutoffSpec::Mode::ChiOmega) {
        for (std::size_t node = 0; node < amps.size(); ++node) {
            const Vec<D> q = mesh.q_node(node / np_total);
            const Vec<D> p = mesh.p_node(node % np_total);
            amps[node] *= chi_omega(std::span<const double>(q.data(), D),
                                    std::span<const double>(p.data(), D), cutoff);
        }
    }

    AmplitudeStats st;
    for (const Complex& a : amps) {
        st.max_abs = std::max(st.max_abs, std::abs(a));
        st.total_weight_mass += std::norm(a);
    }
    const double threshold =
        cutoff.mode == CutoffSpec::Mode::Off ? 0.0 : cutoff.prune_tol * st.max_abs;
    mesh.active.assign(amps.size(), 0);
    for (std::size_t node = 0; node < amps.size(); ++node) {
        const double mag = std::abs(amps[node]);
        if (mag > threshold) {
            mesh.active[node] = 1;
            ++st.active_count;
        } else {
            st.pruned_weight_mass += std::norm(amps[node]);
        }
    }
    if (st.active_count == 0)
        throw EmptyActiveSetError("no phase-space node carries weight above threshold; "
                                  "check the phase-space box sizing");
    if (stats) *stats = st;
    return amps;
}

/// Builds the default mesh: q box = spatial box with dq ~ dq_factor sqrt(eps),
/// p box centered on the dominant momentum of psi0 and widened until the
/// boundary weight falls below pbox_tol of the peak.
template <int D>
PhaseMesh<D> build_phase_mesh(const WaveField& psi0, double eps, double dq_factor = 0.5,
                              double pbox_tol = 1e-8) {
    detail::check_resolution(psi0, eps);
    if (psi0.dims != D) throw GridMismatchError("field dimension does not match mesh");
    PhaseMesh<D> mesh;
    const double spacing_nominal = dq_factor * std::sqrt(eps);
    // common spacing across axes (boxes in this suite share their extent)
    int nq0 = std::max(1, static_cast<int>(std::llround((psi0.box_hi[0] - psi0.box_lo[0]) /
                                                        spacing_nominal)));
    mesh.dq = (psi0.box_hi[0] - psi0.box_lo[0]) / nq0;
    mesh.dp = mesh.dq;
    for (int a = 0; a < D; ++a) {
        mesh.q_lo[a] = psi0.box_lo[a];
        const double len = psi0.box_hi[a] - psi0.box_lo[a];
        mesh.nq[a] = std::max(1, static_cast<int>(std::llround(len / mesh.dq)));
        if (std::abs(mesh.nq[a] * mesh.dq - len) > 1e-9 * len)
            throw ConfigError("spatial box extents are not commensurate with dq");
    }

    // density peak
    std::size_t peak = 0;
    double peak_mag = -1.0;
    for (std::size_t i = 0; i < psi0.values.size(); ++i) {
        const double m = std::abs(psi0.values[i]);
        if (m > peak_mag) {
            peak_mag = m;
            peak = i;
        }
    }
    if (peak_mag <= 0.0) {
        // degenerate data; a minimal box keeps downstream errors informative
        for (int a = 0; a < D; ++a) {
            mesh.np[a] = 4;
            mesh.p_lo[a] = -2.0 * mesh.dp;
        }
        return mesh;
    }
    Vec<D> qstar;
    if constexpr (D == 1) {
        qstar[0] = psi0.x(0, static_cast<int>(peak));
    } else {
        qstar[0] = psi0.x(0, static_cast<int>(peak) / psi0.n[1]);
        qstar[1] = psi0.x(1, static_cast<int>(peak) % psi0.n[1]);
    }

    // dominant momentum at the peak: coordinate-ascent scan of |integral| over
    // one aliasing period (the grid cannot distinguish p beyond it)
    const double p_nyquist = M_PI * eps / psi0.dx(0);
    const int coarse = 64;
    Vec<D> pbar = Vec<D>::Zero();
    auto eval = [&](const Vec<D>& p) { return std::abs(fbi_point<D>(psi0, qstar, p, eps, 1.0)); };
    for (int sweep = 0; sweep < 3; ++sweep) {
        for (int a = 0; a < D; ++a) {
            Vec<D> probe = pbar;
            double best = -1.0, best_p = 0.0;
            for (int i = 0; i < coarse; ++i) {
                probe[a] = -p_nyquist + (2.0 * p_nyquist) * (i + 0.5) / coarse;
                const double v = eval(probe);
                if (v > best) {
                    best = v;
                    best_p = probe[a];
                }
            }
            // refine around the coarse winner at lattice resolution
            const double step = mesh.dp * 0.5;
            const double halfspan = p_nyquist / coarse;
            for (double pc = best_p - halfspan; pc <= best_p + halfspan; pc += step) {
                probe[a] = pc;
                const double v = eval(probe);
                if (v > best) {
                    best = v;
                    best_p = pc;
                }
            }
            pbar[a] = std::round(best_p / mesh.dp) * mesh.dp;
        }
    }

    // widen per-axis half width until the boundary amplitude is negligible
    const double peak_amp = eval(pbar);
    const int m_max = static_cast<int>(std::floor((p_nyquist - 2.0 * mesh.dp) / mesh.dp));
    for (int a = 0; a < D; ++a) {
        int m = 4, consecutive = 0;
        while (m < m_max) {
            Vec<D> probe = pbar;
            probe[a] = pbar[a] + m * mesh.dp;
            double v = eval(probe);
            probe[a] = pbar[a] - m * mesh.dp;
            v = std::max(v, eval(probe));
            if (v < pbox_tol * peak_amp) {
                if (++consecutive >= 3) break;
            } else {
                consecutive = 0;
            }
            ++m;
        }
        const int half = std::min(m + 1, m_max);
        mesh.np[a] = 2 * half;
        mesh.p_lo[a] = pbar[a] - half * mesh.dp;
    }
    return mesh;
}

} // namespace fracfga
