#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "fracfga/harness.hpp"

namespace fracfga {

namespace {

struct Overrides {
    std::string config_path;
    std::optional<std::string> example;
    std::optional<int> eps_pow;
    std::optional<double> alpha;
    std::optional<double> delta_exponent;
    std::optional<double> delta;
    std::optional<double> t_final;
    std::optional<double> dt_fga;
    std::optional<double> dt_ref;
    std::optional<std::string> output_dir;
    std::optional<int> workers;
    bool allow_large = false;
};

void add_common_options(CLI::App* cmd, Overrides& ov) {
    cmd->add_option("--config", ov.config_path, "JSON run configuration file");
    cmd->add_option("--example", ov.example, "ex1d or ex2d");
    cmd->add_option("--eps-pow", ov.eps_pow, "eps = 2^-eps_pow");
    cmd->add_option("--alpha", ov.alpha, "fractional exponent in (1, 2]");
    cmd->add_option("--delta-exponent", ov.delta_exponent, "delta = eps^k");
    cmd->add_option("--delta", ov.delta, "explicit delta (overrides the rule)");
    cmd->add_option("--t-final", ov.t_final, "final time");
    cmd->add_option("--dt-fga", ov.dt_fga, "trajectory ODE step");
    cmd->add_option("--dt-ref", ov.dt_ref, "reference solver step (default eps^2)");
    cmd->add_option("--output-dir", ov.output_dir, "output directory");
    cmd->add_option("--workers", ov.workers, "worker threads (default: all cores)");
    cmd->add_flag("--allow-large", ov.allow_large, "permit expensive 2-d sweep columns");
}

RunConfig build_config(const Overrides& ov) {
    RunConfig cfg;
    if (!ov.config_path.empty()) cfg = RunConfig::from_json_file(ov.config_path);
    if (ov.example) {
        if (*ov.example == "ex1d")
            cfg.example = ExampleCase::Ex1D;
        else if (*ov.example == "ex2d")
            cfg.example = ExampleCase::Ex2D;
        else
            throw ConfigError("--example must be ex1d or ex2d");
    }
    if (ov.eps_pow) cfg.eps_pow = *ov.eps_pow;
    if (ov.alpha) cfg.alpha = *ov.alpha;
    if (ov.delta_exponent) cfg.delta_exponent = *ov.delta_exponent;
    if (ov.delta) cfg.delta_explicit = *ov.delta;
    if (ov.t_final) cfg.t_final = *ov.t_final;
    if (ov.dt_fga) cfg.dt_fga = *ov.dt_fga;
    if (ov.dt_ref) cfg.dt_ref = *ov.dt_ref;
    if (ov.output_dir) cfg.output_dir = *ov.output_dir;
    if (ov.workers) cfg.workers = *ov.workers;
    if (ov.allow_large) cfg.allow_large = true;
    cfg.validate();
    std::filesystem::create_directories(cfg.output_dir);
    return cfg;
}

void print_record(const ErrorRecord& r) {
    std::printf("alpha=%.3g eps=%.6g delta=%.6g l2_abs=%.6e l2_rel=%.6e fga=%.2fs ref=%.2fs\n",
                r.alpha, r.eps, r.delta, r.l2_abs, r.l2_rel, r.runtime_fga_s, r.runtime_ref_s);
}

template <int D>
void dump_trajectory_csv(const RunConfig& cfg, const std::string& path, long index) {
    const WaveField psi0 =
        wkb_initial(cfg.example, cfg.eps(), example_grid(cfg.example, cfg.eps_pow));
    PhaseMesh<D> mesh = build_phase_mesh<D>(psi0, cfg.eps(), cfg.dq_factor);
    CutoffSpec cutoff;
    cutoff.mode = cfg.cutoff_mode;
    cutoff.omega = cfg.omega;
    cutoff.prune_tol = cfg.prune_tol;
    auto trajs = decompose<D>(psi0, mesh, cfg.eps(), cutoff);
    std::size_t pick = 0;
    if (index >= 0) {
        if (static_cast<std::size_t>(index) >= trajs.size())
            throw ConfigError("--traj-index out of range (active count " +
                              std::to_string(trajs.size()) + ")");
        pick = static_cast<std::size_t>(index);
    } else {
        double best = -1.0; // default: strongest initial weight
        for (std::size_t i = 0; i < trajs.size(); ++i) {
            const double m = std::abs(trajs[i].amp());
            if (m > best) {
                best = m;
                pick = i;
            }
        }
    }
    std::ofstream out(path);
    out << "t";
    for (int a = 0; a < D; ++a) out << ",Q" << a;
    for (int a = 0; a < D; ++a) out << ",P" << a;
    out << ",S,re_A,im_A,abs_det_z,sympl_defect\n";
    StepSink<D> sink = [&](double t, const TrajectoryState<D>& st, double adz, double defect) {
        out << t;
        for (int a = 0; a < D; ++a) out << "," << st.Q[a];
        for (int a = 0; a < D; ++a) out << "," << st.P[a];
        const Complex A = st.amp();
        out << "," << st.S << "," << A.real() << "," << A.imag() << "," << adz << "," << defect
            << "\n";
    };
    SymbolSet sym{KineticModel{cfg.alpha, cfg.delta()}, cfg.potential()};
    integrate_trajectory<D>(trajs[pick], cfg.t_final, cfg.dt_fga, sym, nullptr, &sink);
    std::printf("trajectory %zu of %zu dumped to %s\n", pick, trajs.size(), path.c_str());
}

template <int D>
void dump_amplitudes_csv(const RunConfig& cfg, const std::string& path) {
    const WaveField psi0 =
        wkb_initial(cfg.example, cfg.eps(), example_grid(cfg.example, cfg.eps_pow));
    PhaseMesh<D> mesh = build_phase_mesh<D>(psi0, cfg.eps(), cfg.dq_factor);
    CutoffSpec cutoff;
    cutoff.mode = cfg.cutoff_mode;
    cutoff.omega = cfg.omega;
    cutoff.prune_tol = cfg.prune_tol;
    AmplitudeStats stats;
    const std::vector<Complex> amps = initial_amplitudes<D>(psi0, mesh, cfg.eps(), cutoff, &stats);
    std::ofstream out(path);
    for (int a = 0; a < D; ++a) out << "q" << a << ",";
    for (int a = 0; a < D; ++a) out << "p" << a << ",";
    out << "abs_A,active\n";
    const std::size_t np_total = mesh.p_count();
    for (std::size_t node = 0; node < amps.size(); ++node) {
        const auto q = mesh.q_node(node / np_total);
        const auto p = mesh.p_node(node % np_total);
        for (int a = 0; a < D; ++a) out << q[a] << ",";
        for (int a = 0; a < D; ++a) out << p[a] << ",";
        out << std::abs(amps[node]) << "," << int(mesh.active[node]) << "\n";
    }
    std::printf("amplitudes dumped to %s (%zu nodes, %zu active)\n", path.c_str(), amps.size(),
                stats.active_count);
}

int do_run_fga(const RunConfig& cfg, const std::string& traj_dump, long traj_index,
               const std::string& amp_dump) {
    FgaRun run = run_fga(cfg);
    std::printf("phase mesh: %zu nodes, %zu active, captured mass %.12f\n",
                run.diagnostics.node_count, run.diagnostics.active_count,
                1.0 - run.diagnostics.pruned_mass_fraction);
    std::printf("diagnostics: max symplectic defect %.3e, min |det Z| %.6f\n",
                run.diagnostics.max_symplectic_defect, run.diagnostics.min_abs_det_z);
    save_field(run.field, cfg.output_dir + "/field_fga");
    write_summary_json(cfg.output_dir + "/summary.json", cfg, {}, {});
    std::printf("field written to %s/field_fga (%.2f s)\n", cfg.output_dir.c_str(),
                run.runtime_s);
    if (!traj_dump.empty()) {
        if (cfg.dims() == 1)
            dump_trajectory_csv<1>(cfg, traj_dump, traj_index);
        else
            dump_trajectory_csv<2>(cfg, traj_dump, traj_index);
    }
    if (!amp_dump.empty()) {
        if (cfg.dims() == 1)
            dump_amplitudes_csv<1>(cfg, amp_dump);
        else
            dump_amplitudes_csv<2>(cfg, amp_dump);
    }
    return 0;
}

int do_run_ref(const RunConfig& cfg) {
    double runtime = 0.0;
    const WaveField ref = reference_solution(cfg, cfg.eps_pow, &runtime);
    save_field(ref, cfg.output_dir + "/field_ref");
    std::printf("reference written to %s/field_ref (%s)\n", cfg.output_dir.c_str(),
                runtime > 0.0 ? (std::to_string(runtime) + " s").c_str() : "cache hit");
    return 0;
}

int do_compare(const RunConfig& cfg, bool save_fields) {
    CompareArtifacts art;
    const ErrorRecord rec = run_compare(cfg, &art);
    print_record(rec);
    write_errors_csv(cfg.output_dir + "/errors.csv", {rec});
    write_summary_json(cfg.output_dir + "/summary.json", cfg, {rec}, {});
    if (save_fields) {
        save_field(art.fga_field, cfg.output_dir + "/field_fga");
        save_field(art.ref_field, cfg.output_dir + "/field_ref");
    }
    return 0;
}

int do_sweep(const RunConfig& cfg, const std::vector<double>& alphas_cli,
             const std::vector<int>& eps_pows_cli) {
    const std::vector<double> alphas = alphas_cli.empty() ? cfg.alphas : alphas_cli;
    const std::vector<int> pows = eps_pows_cli.empty() ? cfg.sweep_eps_pows() : eps_pows_cli;
    const SweepResult result = convergence_sweep(cfg, alphas, pows, cfg.delta_exponent);
    for (const ErrorRecord& r : result.records) print_record(r);
    for (const SlopeFit& s : result.slopes)
        std::printf("alpha=%.3g slope=%.4f intercept=%.4f\n", s.alpha, s.slope, s.intercept);
    write_errors_csv(cfg.output_dir + "/errors.csv", result.records);
    write_table_csv(cfg.output_dir + "/table.csv", result.records);
    write_slopes_csv(cfg.output_dir + "/slopes.csv", result.slopes, result.delta_exponent);
    write_summary_json(cfg.output_dir + "/summary.json", cfg, result.records, result.slopes);
    std::printf("sweep outputs in %s\n", cfg.output_dir.c_str());
    return 0;
}

} // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"Frozen Gaussian approximation solver suite for the semiclassical "
                 "fractional Schroedinger equation"};
    app.require_subcommand(1);

    Overrides ov;
    std::string traj_dump, amp_dump;
    long traj_index = -1;
    bool save_fields = false;
    std::vector<double> alphas_cli;
    std::vector<int> eps_pows_cli;

    CLI::App* cmd_fga = app.add_subcommand("run-fga", "run the FGA solver and save the field");
    add_common_options(cmd_fga, ov);
    cmd_fga->add_option("--traj-dump", traj_dump, "per-step CSV dump of one trajectory");
    cmd_fga->add_option("--traj-index", traj_index,
                        "trajectory to dump (default: strongest weight)");
    cmd_fga->add_option("--amp-dump", amp_dump, "CSV dump of |A(0,q,p)| over the mesh");

    CLI::App* cmd_ref = app.add_subcommand("run-ref", "run the spectral reference solver");
    add_common_options(cmd_ref, ov);

    CLI::App* cmd_cmp = app.add_subcommand("compare", "FGA vs reference L2 error");
    add_common_options(cmd_cmp, ov);
    cmd_cmp->add_flag("--save-fields", save_fields, "also write both fields");

    CLI::App* cmd_sweep = app.add_subcommand("sweep", "error table over alpha x eps");
    add_common_options(cmd_sweep, ov);
    cmd_sweep->add_option("--alphas", alphas_cli, "alpha values (overrides config)");
    cmd_sweep->add_option("--eps-pows", eps_pows_cli, "eps exponents (overrides config)");

    app.add_subcommand("selftest", "run the invariant suites");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand("selftest"))
            return run_property_suite(std::cout) == 0 ? 0 : 1;
        const RunConfig cfg = build_config(ov);
        if (app.got_subcommand(cmd_fga)) return do_run_fga(cfg, traj_dump, traj_index, amp_dump);
        if (app.got_subcommand(cmd_ref)) return do_run_ref(cfg);
        if (app.got_subcommand(cmd_cmp)) return do_compare(cfg, save_fields);
        if (app.got_subcommand(cmd_sweep)) return do_sweep(cfg, alphas_cli, eps_pows_cli);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace fracfga
