#pragma once

#include <limits>
#include <mutex>
#include <vector>

#include "fracfga/fbi.hpp"
#include "fracfga/flow.hpp"

namespace fracfga {

struct FgaDiagnostics {
    double max_symplectic_defect = 0.0;
    double min_abs_det_z = std::numeric_limits<double>::infinity();
    double pruned_mass_fraction = 0.0;
    std::size_t node_count = 0;
    std::size_t active_count = 0;
};

template <int D> struct FgaSolution {
    WaveField field; // reconstructed psi at t_final on the requested grid
    std::vector<TrajectoryState<D>> trajectories;
    FgaDiagnostics diagnostics;
};

template <int D> struct FgaParams {
    SymbolSet symbols;
    double eps = 0.0;
    double t_final = 0.0;
    double dt = 1e-2;
    double dq_factor = 0.5;
    CutoffSpec cutoff;
    int workers = 0;
};

/// One TrajectoryState per active mesh node: (Q,P) = (q,p), S = 0, F = Id,
/// log A from the initial FBI amplitude.
template <int D>
std::vector<TrajectoryState<D>> decompose(const WaveField& psi0, PhaseMesh<D>& mesh,
                                          double eps, const CutoffSpec& cutoff,
                                          AmplitudeStats* stats = nullptr, int workers = 0) {
    AmplitudeStats st;
    const std::vector<Complex> amps = initial_amplitudes<D>(psi0, mesh, eps, cutoff, &st, workers);
    if (stats) *stats = st;
    const std::size_t np_total = mesh.p_count();
    std::vector<TrajectoryState<D>> trajs;
    trajs.reserve(st.active_count);
    for (std::size_t node = 0; node < amps.size(); ++node) {
        if (!mesh.active[node]) continue;
        trajs.push_back(TrajectoryState<D>::initial(mesh.q_node(node / np_total),
                                                    mesh.p_node(node % np_total),
                                                    std::log(amps[node])));
    }
    return trajs;
}

/// Parallel map of integrate_trajectory; each worker owns a contiguous block.
/// Aggregates the trajectory diagnostics; any trajectory failure fails the run.
template <int D>
void propagate(std::vector<TrajectoryState<D>>& trajs, double t_final, double dt,
               const SymbolSet& symbols, FgaDiagnostics& diag, int workers = 0) {
    if (workers <= 0) workers = default_workers();
    std::mutex merge_mutex;
    parallel_chunks(trajs.size(), workers, [&](std::size_t b, std::size_t e, int) {
        TrajectoryDiagnostics local;
        for (std::size_t i = b; i < e; ++i)
            trajs[i] = integrate_trajectory<D>(trajs[i], t_final, dt, symbols, &local);
        std::lock_guard<std::mutex> lock(merge_mutex);
        diag.max_symplectic_defect =
            std::max(diag.max_symplectic_defect, local.max_symplectic_defect);
        diag.min_abs_det_z = std::min(diag.min_abs_det_z, local.min_abs_det_z);
    });
}

/// psi(x) = Sum_k A_k e^{(i/eps)(S_k + P_k (x - Q_k)) - |x - Q_k|^2/(2 eps)}
/// (dq dp)^d, each Gaussian evaluated inside its truncation window only.
template <int D>
WaveField reconstruct(const std::vector<TrajectoryState<D>>& trajs, const WaveField& out_grid,
                      double eps, const PhaseMesh<D>& mesh, int workers = 0) {
    detail::check_resolution(out_grid, eps);
    std::vector<GaussianTerm<D>> terms(trajs.size());
    const double vol = mesh.cell_volume();
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        const TrajectoryState<D>& t = trajs[i];
        terms[i].center = t.Q;
        terms[i].momentum = t.P;
        terms[i].coeff = vol * std::exp(t.log_amp + Complex(0.0, t.S / eps));
    }
    WaveField out(out_grid.dims, out_grid.box_lo, out_grid.box_hi, out_grid.n);
    accumulate_gaussians<D>(std::span<const GaussianTerm<D>>(terms), eps, out, workers);
    return out;
}

/// decompose -> propagate -> reconstruct. Stage failures are rethrown with a
/// stage tag attached.
template <int D>
FgaSolution<D> solve(const WaveField& psi0, const FgaParams<D>& params) {
    params.symbols.kinetic.validate();
    FgaSolution<D> sol;
    PhaseMesh<D> mesh;
    AmplitudeStats stats;
    try {
        mesh = build_phase_mesh<D>(psi0, params.eps, params.dq_factor);
        sol.trajectories =
            decompose<D>(psi0, mesh, params.eps, params.cutoff, &stats, params.workers);
    } catch (const Error& e) {
        throw Error("decompose: " + std::string(e.what()));
    }
    sol.diagnostics.node_count = mesh.node_count();
    sol.diagnostics.active_count = stats.active_count;
    sol.diagnostics.pruned_mass_fraction = stats.pruned_mass_fraction();
    try {
        propagate<D>(sol.trajectories, params.t_final, params.dt, params.symbols,
                     sol.diagnostics, params.workers);
    } catch (const Error& e) {
        throw Error("propagate: " + std::string(e.what()));
    }
    try {
        sol.field = reconstruct<D>(sol.trajectories, psi0, params.eps, mesh, params.workers);
    } catch (const Error& e) {
        throw Error("reconstruct: " + std::string(e.what()));
    }
    return sol;
}

} // namespace fracfga
