#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <sstream>

#include "fracfga/symbols.hpp"

namespace fracfga {

using Complex = std::complex<double>;

template <int D> using Vec = Eigen::Matrix<double, D, 1>;
template <int D> using Mat = Eigen::Matrix<double, D, D>;
template <int D> using PhaseMat = Eigen::Matrix<double, 2 * D, 2 * D>;
template <int D> using CMat = Eigen::Matrix<std::complex<double>, D, D>;

/// One frozen-Gaussian trajectory. F is the Jacobian of the flow map
/// (q,p) -> (Q,P) with block layout
///     F = [ dQ/dq  dQ/dp ]
///         [ dP/dq  dP/dp ]
/// so that dF/dt = [[0, T''(P)], [-V''(Q), 0]] F and F(0) = Id.
/// The complex weight is carried as log A: the amplitude relation
/// a = sqrt(det Z) needs a branch choice, while d(log A)/dt = tr(Z^{-1} dZ/dt)/2
/// is branch-free and continuous.
template <int D> struct TrajectoryState {
    Vec<D> q0, p0;      // phase-space label (fixed)
    Vec<D> Q, P;        // live centers
    double S = 0.0;     // action
    PhaseMat<D> F;      // flow Jacobian
    std::complex<double> log_amp{0.0, 0.0};

    std::complex<double> amp() const { return std::exp(log_amp); }

    static TrajectoryState initial(const Vec<D>& q, const Vec<D>& p,
                                   std::complex<double> log_weight) {
        TrajectoryState s;
        s.q0 = q; s.p0 = p;
        s.Q = q; s.P = p;
        s.S = 0.0;
        s.F = PhaseMat<D>::Identity();
        s.log_amp = log_weight;
        return s;
    }
};

/// Right-hand sides for one trajectory.
template <int D> struct FlowDerivative {
    Vec<D> dQ, dP;
    double dS = 0.0;
    PhaseMat<D> dF;
    std::complex<double> dLogA{0.0, 0.0};
};

/// Z = d_z(Q + iP) with d_z = d_q - i d_p, read off the Jacobian blocks:
/// Z = (dQ/dq + dP/dp)^T + i (dP/dq - dQ/dp)^T. F = Id gives Z = 2 Id.
template <int D> CMat<D> z_matrix(const PhaseMat<D>& F) {
    const Mat<D> qq = F.template topLeftCorner<D, D>();
    const Mat<D> qp = F.template topRightCorner<D, D>();
    const Mat<D> pq = F.template bottomLeftCorner<D, D>();
    const Mat<D> pp = F.template bottomRightCorner<D, D>();
    CMat<D> z = (qq + pp).transpose().template cast<std::complex<double>>();
    z += std::complex<double>(0.0, 1.0) * (pq - qp).transpose().template cast<std::complex<double>>();
    return z;
}

/// Max-abs entry of F^T J F - J; zero for an exactly symplectic F.
template <int D> double symplectic_defect(const PhaseMat<D>& F) {
    PhaseMat<D> J = PhaseMat<D>::Zero();
    J.template topRightCorner<D, D>() = Mat<D>::Identity();
    J.template bottomLeftCorner<D, D>() = -Mat<D>::Identity();
    return (F.transpose() * J * F - J).cwiseAbs().maxCoeff();
}

template <int D> Mat<D> kinetic_hess_mat(const Vec<D>& p, const KineticModel& m) {
    Mat<D> h; // symmetric, so row/column-major storage agree
    kinetic_hess(std::span<const double>(p.data(), D), m, h.data());
    return h;
}

template <int D> Vec<D> kinetic_grad_vec(const Vec<D>& p, const KineticModel& m) {
    Vec<D> g;
    kinetic_grad(std::span<const double>(p.data(), D), m, std::span<double>(g.data(), D));
    return g;
}

template <int D> Mat<D> potential_hess_mat(const Vec<D>& x, const PotentialModel& m) {
    Mat<D> h;
    m.hess(std::span<const double>(x.data(), D), h.data());
    return h;
}

template <int D> Vec<D> potential_grad_vec(const Vec<D>& x, const PotentialModel& m) {
    Vec<D> g;
    m.grad(std::span<const double>(x.data(), D), std::span<double>(g.data(), D));
    return g;
}

/// Regularized Hamiltonian H^delta(Q, P) = T^delta(P) + V(Q).
template <int D> double hamiltonian(const TrajectoryState<D>& s, const SymbolSet& sym) {
    return kinetic_value(std::span<const double>(s.P.data(), D), sym.kinetic) +
           sym.potential.value(std::span<const double>(s.Q.data(), D));
}

template <int D>
FlowDerivative<D> flow_rhs(const TrajectoryState<D>& s, const SymbolSet& sym) {
    const KineticModel& kin = sym.kinetic;
    FlowDerivative<D> d;
    d.dQ = kinetic_grad_vec<D>(s.P, kin);
    d.dP = -potential_grad_vec<D>(s.Q, sym.potential);

    const double s2 = s.P.squaredNorm() + kin.delta * kin.delta;
    d.dS = (1.0 - 1.0 / kin.alpha) * std::pow(s2, 0.5 * kin.alpha) -
           sym.potential.value(std::span<const double>(s.Q.data(), D));

    const Mat<D> tpp = kinetic_hess_mat<D>(s.P, kin);
    const Mat<D> vqq = potential_hess_mat<D>(s.Q, sym.potential);

    const Mat<D> fqq = s.F.template topLeftCorner<D, D>();
    const Mat<D> fqp = s.F.template topRightCorner<D, D>();
    const Mat<D> fpq = s.F.template bottomLeftCorner<D, D>();
    const Mat<D> fpp = s.F.template bottomRightCorner<D, D>();
    d.dF.template topLeftCorner<D, D>() = tpp * fpq;
    d.dF.template topRightCorner<D, D>() = tpp * fpp;
    d.dF.template bottomLeftCorner<D, D>() = -vqq * fqq;
    d.dF.template bottomRightCorner<D, D>() = -vqq * fqp;

    const CMat<D> z = z_matrix<D>(s.F);
    CMat<D> zdot = (tpp * fpq - vqq * fqp).transpose().template cast<std::complex<double>>();
    zdot += std::complex<double>(0.0, 1.0) *
            (-vqq * fqq - tpp * fpp).transpose().template cast<std::complex<double>>();

    const CMat<D> zinv = z.inverse();
    const double cond_est = z.cwiseAbs().sum() * zinv.cwiseAbs().sum();
    if (!(cond_est < 1e12))
        throw SingularZError("condition estimate " + std::to_string(cond_est));
    d.dLogA = 0.5 * (zinv * zdot).trace();
    return d;
}

template <int D>
TrajectoryState<D> advanced(const TrajectoryState<D>& s, const FlowDerivative<D>& d,
                            double h) {
    TrajectoryState<D> r = s;
    r.Q += h * d.dQ;
    r.P += h * d.dP;
    r.S += h * d.dS;
    r.F += h * d.dF;
    r.log_amp += h * d.dLogA;
    return r;
}

/// Classical RK4 update of (Q, P, S, F, log A) simultaneously.
template <int D>
TrajectoryState<D> rk4_step(const TrajectoryState<D>& s, double dt, const SymbolSet& sym) {
    const FlowDerivative<D> k1 = flow_rhs<D>(s, sym);
    const FlowDerivative<D> k2 = flow_rhs<D>(advanced<D>(s, k1, 0.5 * dt), sym);
    const FlowDerivative<D> k3 = flow_rhs<D>(advanced<D>(s, k2, 0.5 * dt), sym);
    const FlowDerivative<D> k4 = flow_rhs<D>(advanced<D>(s, k3, dt), sym);
    TrajectoryState<D> r = s;
    const double w = dt / 6.0;
    r.Q += w * (k1.dQ + 2.0 * k2.dQ + 2.0 * k3.dQ + k4.dQ);
    r.P += w * (k1.dP + 2.0 * k2.dP + 2.0 * k3.dP + k4.dP);
    r.S += w * (k1.dS + 2.0 * k2.dS + 2.0 * k3.dS + k4.dS);
    r.F += w * (k1.dF + 2.0 * k2.dF + 2.0 * k3.dF + k4.dF);
    r.log_amp += w * (k1.dLogA + 2.0 * k2.dLogA + 2.0 * k3.dLogA + k4.dLogA);
    return r;
}

struct TrajectoryDiagnostics {
    double max_symplectic_defect = 0.0;
    double min_abs_det_z = std::numeric_limits<double>::infinity();
};

/// Per-step observer for the optional trajectory dump.
template <int D>
using StepSink = std::function<void(double t, const TrajectoryState<D>&, double abs_det_z,
                                    double sympl_defect)>;

/// Fixed-step RK4 to t_final; a shorter final step absorbs any remainder.
template <int D>
TrajectoryState<D> integrate_trajectory(TrajectoryState<D> s, double t_final, double dt,
                                        const SymbolSet& sym,
                                        TrajectoryDiagnostics* diag = nullptr,
                                        const StepSink<D>* sink = nullptr) {
    if (t_final < 0.0) throw ConfigError("t_final must be >= 0");
    if (t_final > 0.0 && !(dt > 0.0)) throw ConfigError("dt must be > 0");

    auto observe = [&](double t) {
        const double defect = symplectic_defect<D>(s.F);
        const double adz = std::abs(z_matrix<D>(s.F).determinant());
        if (diag) {
            diag->max_symplectic_defect = std::max(diag->max_symplectic_defect, defect);
            diag->min_abs_det_z = std::min(diag->min_abs_det_z, adz);
        }
        if (sink) (*sink)(t, s, adz, defect);
    };

    try {
        observe(0.0);
        double t = 0.0;
        const long nfull = static_cast<long>(std::floor(t_final / dt + 1e-9));
        for (long i = 0; i < nfull; ++i) {
            s = rk4_step<D>(s, dt, sym);
            t = (i + 1) * dt;
            observe(t);
        }
        const double rest = t_final - nfull * dt;
        if (rest > 1e-12 * std::max(1.0, t_final)) {
            s = rk4_step<D>(s, rest, sym);
            observe(t_final);
        }
    } catch (const SingularZError& e) {
        std::ostringstream os;
        os << e.what() << " [trajectory q0 = " << s.q0.transpose()
           << ", p0 = " << s.p0.transpose() << "]";
        throw SingularZError(os.str());
    }
    return s;
}

} // namespace fracfga
