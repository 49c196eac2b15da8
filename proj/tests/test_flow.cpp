#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fracfga/flow.hpp"

using namespace fracfga;
using std::complex_literals::operator""i;

namespace {
SymbolSet free_flow(double alpha = 2.0, double delta = 0.0) {
    return {KineticModel{alpha, delta}, PotentialModel::zero()};
}
} // namespace

TEST_CASE("z_matrix at the identity Jacobian") {
    CHECK(z_matrix<1>(PhaseMat<1>::Identity())(0, 0) == Complex(2.0, 0.0));
    const CMat<2> z2 = z_matrix<2>(PhaseMat<2>::Identity());
    CHECK(z2(0, 0) == Complex(2.0, 0.0));
    CHECK(z2(1, 1) == Complex(2.0, 0.0));
    CHECK(z2(0, 1) == Complex(0.0, 0.0));
    CHECK(std::abs(z2.determinant() - Complex(4.0, 0.0)) < 1e-15);
}

TEST_CASE("free flow: rhs, analytic Jacobian and Z") {
    const SymbolSet sym = free_flow();
    Vec<1> q, p;
    q[0] = 0.4;
    p[0] = 1.3;
    auto st = TrajectoryState<1>::initial(q, p, Complex(0.0, 0.0));
    const FlowDerivative<1> d = flow_rhs<1>(st, sym);
    CHECK(d.dQ[0] == doctest::Approx(1.3).epsilon(1e-15));
    CHECK(d.dP[0] == 0.0);
    CHECK(d.dS == doctest::Approx(0.5 * 1.3 * 1.3).epsilon(1e-15));

    // RK4 is exact for this linear flow
    const double t = 0.7;
    st = integrate_trajectory<1>(st, t, 0.1, sym);
    CHECK(st.Q[0] == doctest::Approx(0.4 + 1.3 * t).epsilon(1e-15));
    CHECK(st.P[0] == doctest::Approx(1.3).epsilon(1e-15));
    CHECK(st.S == doctest::Approx(0.5 * 1.3 * 1.3 * t).epsilon(1e-14));
    const Complex z = z_matrix<1>(st.F)(0, 0);
    CHECK(std::abs(z - (2.0 - 1i * t)) < 1e-12); // Q = q + pt, P = p
}

TEST_CASE("harmonic 2-d force direction") {
    const SymbolSet sym{KineticModel{2.0, 0.0}, PotentialModel::harmonic2d(1.0, 1.0)};
    Vec<2> q, p;
    q << 2.0, 1.0;
    p << 0.0, 1.0;
    const auto st = TrajectoryState<2>::initial(q, p, Complex(0.0, 0.0));
    const FlowDerivative<2> d = flow_rhs<2>(st, sym);
    CHECK(d.dP[0] == doctest::Approx(-1.0));
    CHECK(d.dP[1] == doctest::Approx(0.0));
}

TEST_CASE("d/dt log det Z equals twice the amplitude derivative") {
    // oracle: Richardson-extrapolated finite differences of log det Z along an
    // integrated trajectory
    const SymbolSet sym{KineticModel{1.5, 0.1}, PotentialModel::cosine1d()};
    Vec<1> q, p;
    q[0] = 0.3;
    p[0] = 0.9;
    const double dt = 1e-3;
    std::vector<TrajectoryState<1>> states;
    std::vector<Complex> detz;
    StepSink<1> sink = [&](double, const TrajectoryState<1>& st, double, double) {
        states.push_back(st);
        detz.push_back(z_matrix<1>(st.F).determinant());
    };
    integrate_trajectory<1>(TrajectoryState<1>::initial(q, p, Complex(0.0, 0.0)), 0.25, dt,
                            sym, nullptr, &sink);
    REQUIRE(states.size() > 10);
    for (std::size_t k = 4; k + 4 < states.size(); k += 17) {
        auto central = [&](std::size_t step) {
            return std::log(detz[k + step] / detz[k - step]) / (2.0 * step * dt);
        };
        const Complex fd = (4.0 * central(1) - central(2)) / 3.0;
        const Complex dlog = 2.0 * flow_rhs<1>(states[k], sym).dLogA;
        CHECK(std::abs(fd - dlog) < 1e-6);
    }
}

TEST_CASE("harmonic oscillator quarter period") {
    const SymbolSet sym{KineticModel{2.0, 0.0}, PotentialModel::harmonic1d(0.0)};
    Vec<1> q, p;
    q[0] = 1.0;
    p[0] = 0.0;
    auto st = TrajectoryState<1>::initial(q, p, Complex(0.0, 0.0));
    st = integrate_trajectory<1>(st, M_PI / 2.0, 1e-3, sym);
    CHECK(std::abs(st.Q[0] - 0.0) < 1e-9);
    CHECK(std::abs(st.P[0] - (-1.0)) < 1e-9);
}

TEST_CASE("harmonic 2-d full revolution returns to the start") {
    const SymbolSet sym{KineticModel{2.0, 0.0}, PotentialModel::harmonic2d(1.0, 1.0)};
    Vec<2> q, p;
    q << 1.7, 0.6;
    p << -0.3, 0.8;
    auto st = TrajectoryState<2>::initial(q, p, Complex(0.0, 0.0));
    st = integrate_trajectory<2>(st, 2.0 * M_PI, 1e-3, sym);
    CHECK((st.Q - q).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((st.P - p).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("energy conservation at the production step size") {
    const double eps = std::ldexp(1.0, -6);
    const SymbolSet sym{KineticModel{1.5, eps}, PotentialModel::cosine1d()};
    Vec<1> q, p;
    q[0] = 0.5;
    p[0] = 1.0;
    auto st = TrajectoryState<1>::initial(q, p, Complex(0.0, 0.0));
    const double h0 = hamiltonian<1>(st, sym);
    st = integrate_trajectory<1>(st, 0.25, 1e-2, sym);
    CHECK(std::abs(hamiltonian<1>(st, sym) - h0) < 1e-6);
}

TEST_CASE("zero-length integration is the identity") {
    const SymbolSet sym{KineticModel{1.5, 0.1}, PotentialModel::cosine1d()};
    Vec<1> q, p;
    q[0] = 0.2;
    p[0] = -0.7;
    const auto st0 = TrajectoryState<1>::initial(q, p, Complex(0.2, 0.1));
    const auto st = integrate_trajectory<1>(st0, 0.0, 1e-2, sym);
    CHECK(st.Q[0] == st0.Q[0]);
    CHECK(st.P[0] == st0.P[0]);
    CHECK(st.S == st0.S);
    CHECK(st.log_amp == st0.log_amp);
}

TEST_CASE("momentum sandwich |p| - Ct <= |P| <= |p| + Ct for the cosine potential") {
    const SymbolSet sym{KineticModel{1.3, 0.02}, PotentialModel::cosine1d()};
    const double C = M_PI;
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> qd(0.0, 2.0), pd(-2.0, 2.0);
    for (int i = 0; i < 30; ++i) {
        Vec<1> q, p;
        q[0] = qd(rng);
        p[0] = pd(rng);
        StepSink<1> sink = [&](double t, const TrajectoryState<1>& st, double, double) {
            CHECK(std::abs(st.P[0]) >= std::abs(p[0]) - C * t - 1e-9);
            CHECK(std::abs(st.P[0]) <= std::abs(p[0]) + C * t + 1e-9);
        };
        integrate_trajectory<1>(TrajectoryState<1>::initial(q, p, Complex(0.0, 0.0)), 0.25,
                                1e-2, sym, nullptr, &sink);
    }
}

TEST_CASE("symplecticity and det Z bound along sampled trajectories") {
    const SymbolSet sym{KineticModel{1.5, 0.015625}, PotentialModel::cosine1d()};
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> qd(0.0, 2.0), pd(-1.5, 1.5);
    double max_defect = 0.0, min_dz = 1e300;
    for (int i = 0; i < 100; ++i) {
        Vec<1> q, p;
        q[0] = qd(rng);
        p[0] = pd(rng);
        TrajectoryDiagnostics diag;
        integrate_trajectory<1>(TrajectoryState<1>::initial(q, p, Complex(0.0, 0.0)), 0.25,
                                1e-3, sym, &diag);
        max_defect = std::max(max_defect, diag.max_symplectic_defect);
        min_dz = std::min(min_dz, diag.min_abs_det_z);
    }
    CHECK(max_defect <= 1e-6);
    CHECK(min_dz >= std::sqrt(2.0) - 1e-9);
}

TEST_CASE("amplitude squared tracks det Z / 2^d") {
    const SymbolSet sym{KineticModel{1.5, 0.05}, PotentialModel::cosine1d()};
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> qd(0.0, 2.0), pd(-1.2, 1.2);
    for (int i = 0; i < 40; ++i) {
        Vec<1> q, p;
        q[0] = qd(rng);
        p[0] = pd(rng);
        auto st = TrajectoryState<1>::initial(q, p, Complex(0.3, -0.2));
        const Complex a0 = st.amp();
        st = integrate_trajectory<1>(st, 0.25, 1e-3, sym);
        const Complex ratio2 = std::pow(st.amp() / a0, 2.0);
        const Complex dz = z_matrix<1>(st.F).determinant() / 2.0;
        CHECK(std::abs(ratio2 - dz) <= 1e-6 * std::abs(dz));
    }
}

TEST_CASE("numerically singular Z is reported") {
    // F with dQ/dq = dP/dp = 0 and dQ/dp = dP/dq = Id gives Z = 0
    const SymbolSet sym{KineticModel{1.5, 0.1}, PotentialModel::cosine1d()};
    TrajectoryState<1> st;
    st.q0[0] = st.p0[0] = st.Q[0] = st.P[0] = 0.5;
    st.F = PhaseMat<1>::Zero();
    st.F(0, 1) = 1.0;
    st.F(1, 0) = 1.0;
    CHECK_THROWS_AS(flow_rhs<1>(st, sym), SingularZError);
}

TEST_CASE("integration attaches the trajectory label to failures") {
    const SymbolSet sym{KineticModel{1.5, 0.1}, PotentialModel::cosine1d()};
    TrajectoryState<1> st;
    st.q0[0] = 0.25;
    st.p0[0] = -0.75;
    st.Q = st.q0;
    st.P = st.p0;
    st.F = PhaseMat<1>::Zero();
    st.F(0, 1) = 1.0;
    st.F(1, 0) = 1.0;
    try {
        integrate_trajectory<1>(st, 0.1, 1e-2, sym);
        FAIL("expected SingularZError");
    } catch (const SingularZError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("0.25") != std::string::npos);
        CHECK(msg.find("-0.75") != std::string::npos);
    }
}

TEST_CASE("partial final step lands exactly on t_final") {
    const SymbolSet sym = free_flow();
    Vec<1> q, p;
    q[0] = 0.0;
    p[0] = 1.0;
    auto st = TrajectoryState<1>::initial(q, p, Complex(0.0, 0.0));
    st = integrate_trajectory<1>(st, 0.25, 0.1, sym); // 2 full steps + 0.05
    CHECK(st.Q[0] == doctest::Approx(0.25).epsilon(1e-14));
}
