#include "fracfga/harness.hpp"

#include <json.hpp>

#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace fracfga {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {
double now_seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string format_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
} // namespace

double RunConfig::delta_for(int pow) const {
    if (delta_explicit) return *delta_explicit;
    return std::pow(std::ldexp(1.0, -pow), delta_exponent);
}

double RunConfig::delta() const { return delta_for(eps_pow); }

double RunConfig::ref_dt(int pow) const {
    if (dt_ref) return *dt_ref;
    return std::ldexp(1.0, -2 * pow); // eps^2
}

PotentialModel RunConfig::potential() const {
    if (potential_override) return *potential_override;
    return example == ExampleCase::Ex1D ? PotentialModel::cosine1d()
                                        : PotentialModel::harmonic2d(1.0, 1.0);
}

std::string RunConfig::cache_dir() const {
    if (ref_cache_dir) return *ref_cache_dir;
    return output_dir + "/ref_cache";
}

std::vector<int> RunConfig::sweep_eps_pows() const {
    if (!eps_pows.empty()) return eps_pows;
    return dims() == 1 ? std::vector<int>{6, 7, 8, 9} : std::vector<int>{6, 7};
}

void RunConfig::validate() const {
    if (eps_pow < 1 || eps_pow > 24) throw ConfigError("eps_pow must be in [1, 24]");
    if (!(alpha > 1.0 && alpha <= 2.0)) throw ConfigError("alpha must be in (1, 2]");
    if (!(t_final > 0.0)) throw ConfigError("t_final must be > 0");
    if (!(dt_fga > 0.0)) throw ConfigError("dt_fga must be > 0");
    if (dt_ref && !(*dt_ref > 0.0)) throw ConfigError("dt_ref must be > 0");
    if (!(dq_factor > 0.0)) throw ConfigError("dq_factor must be > 0");
    if (!(prune_tol >= 0.0 && prune_tol < 1.0)) throw ConfigError("prune_tol must be in [0, 1)");
    if (delta_explicit && !(*delta_explicit >= 0.0)) throw ConfigError("delta must be >= 0");
    if (cutoff_mode == CutoffSpec::Mode::ChiOmega && !(omega > 0.0))
        throw ConfigError("chi_omega cutoff requires omega > 0");
}

RunConfig RunConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("invalid JSON in " + path + ": " + e.what());
    }
    RunConfig cfg;
    try {
        if (j.contains("example")) {
            const std::string ex = j["example"].get<std::string>();
            if (ex == "ex1d")
                cfg.example = ExampleCase::Ex1D;
            else if (ex == "ex2d")
                cfg.example = ExampleCase::Ex2D;
            else
                throw ConfigError("example must be 'ex1d' or 'ex2d'");
        }
        if (j.contains("eps_pow")) cfg.eps_pow = j["eps_pow"].get<int>();
        if (j.contains("alpha")) cfg.alpha = j["alpha"].get<double>();
        if (j.contains("delta_exponent")) cfg.delta_exponent = j["delta_exponent"].get<double>();
        if (j.contains("delta") && !j["delta"].is_null())
            cfg.delta_explicit = j["delta"].get<double>();
        if (j.contains("t_final")) cfg.t_final = j["t_final"].get<double>();
        if (j.contains("dt_fga")) cfg.dt_fga = j["dt_fga"].get<double>();
        if (j.contains("dt_ref") && !j["dt_ref"].is_null())
            cfg.dt_ref = j["dt_ref"].get<double>();
        if (j.contains("dq_factor")) cfg.dq_factor = j["dq_factor"].get<double>();
        if (j.contains("prune_tol")) cfg.prune_tol = j["prune_tol"].get<double>();
        if (j.contains("cutoff_mode")) {
            const std::string m = j["cutoff_mode"].get<std::string>();
            if (m == "off")
                cfg.cutoff_mode = CutoffSpec::Mode::Off;
            else if (m == "mass_threshold")
                cfg.cutoff_mode = CutoffSpec::Mode::MassThreshold;
            else if (m == "chi_omega")
                cfg.cutoff_mode = CutoffSpec::Mode::ChiOmega;
            else
                throw ConfigError("cutoff_mode must be off|mass_threshold|chi_omega");
        }
        if (j.contains("omega")) cfg.omega = j["omega"].get<double>();
        if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
        if (j.contains("ref_cache_dir") && !j["ref_cache_dir"].is_null())
            cfg.ref_cache_dir = j["ref_cache_dir"].get<std::string>();
        if (j.contains("workers")) cfg.workers = j["workers"].get<int>();
        if (j.contains("alphas")) cfg.alphas = j["alphas"].get<std::vector<double>>();
        if (j.contains("eps_pows")) cfg.eps_pows = j["eps_pows"].get<std::vector<int>>();
        if (j.contains("allow_large")) cfg.allow_large = j["allow_large"].get<bool>();
        if (j.contains("potential")) {
            const auto& p = j["potential"];
            cfg.potential_override = PotentialModel::by_name(
                p.at("name").get<std::string>(),
                p.contains("params") ? p["params"].get<std::vector<double>>()
                                     : std::vector<double>{});
        }
    } catch (const json::exception& e) {
        throw ConfigError("bad config value: " + std::string(e.what()));
    }
    return cfg;
}

WaveField example_grid(ExampleCase example, int eps_pow) {
    const int d = example == ExampleCase::Ex1D ? 1 : 2;
    const int n = 1 << (eps_pow + 1); // dx = eps on [0, 2]
    return WaveField(d, {0.0, 0.0}, {2.0, 2.0}, {n, d == 2 ? n : 1});
}

WaveField wkb_initial(ExampleCase example, double eps, const WaveField& grid_template) {
    const int want_d = example == ExampleCase::Ex1D ? 1 : 2;
    if (grid_template.dims != want_d)
        throw GridMismatchError("example dimension does not match grid");
    for (int a = 0; a < want_d; ++a) {
        if (std::abs(grid_template.box_lo[a]) > 1e-12 ||
            std::abs(grid_template.box_hi[a] - 2.0) > 1e-12)
            throw ConfigError("benchmark initial data lives on [0,2]^d");
        if (grid_template.dx(a) > eps * (1.0 + 1e-9))
            throw ResolutionError("wkb data needs dx <= eps");
    }
    WaveField f(grid_template.dims, grid_template.box_lo, grid_template.box_hi,
                grid_template.n);
    if (example == ExampleCase::Ex1D) {
        const double amp0 = std::sqrt(64.0 / M_PI);
        for (int i = 0; i < f.n[0]; ++i) {
            const double x = f.x(0, i);
            const double a = amp0 * std::exp(-64.0 * (x - 1.0) * (x - 1.0));
            const double ph = x / eps;
            f.values[i] = a * Complex(std::cos(ph), std::sin(ph));
        }
    } else {
        const double amp0 = 64.0 / M_PI;
        for (int i0 = 0; i0 < f.n[0]; ++i0) {
            const double x0 = f.x(0, i0);
            const double g0 = std::exp(-64.0 * (x0 - 1.0) * (x0 - 1.0));
            for (int i1 = 0; i1 < f.n[1]; ++i1) {
                const double x1 = f.x(1, i1);
                const double a = amp0 * g0 * std::exp(-64.0 * (x1 - 1.0) * (x1 - 1.0));
                const double ph = (x1 - 1.0) / eps;
                f.values[f.index(i0, i1)] = a * Complex(std::cos(ph), std::sin(ph));
            }
        }
    }
    return f;
}

SlopeFit fit_slope(double alpha, const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3) throw ConfigError("slope fit needs at least 3 points");
    SlopeFit fit;
    fit.alpha = alpha;
    fit.points = points;
    double sx = 0, sy = 0;
    for (const auto& [x, y] : points) {
        sx += x;
        sy += y;
    }
    const double n = static_cast<double>(points.size());
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (const auto& [x, y] : points) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if (sxx == 0.0) throw ConfigError("slope fit needs distinct eps values");
    const double b = sxy / sxx; // raw slope of log2(err) vs -log2(eps)
    fit.slope = -b;             // decay rate; halving errors -> +1
    fit.intercept = my - b * mx;
    return fit;
}

std::string reference_cache_key(const RunConfig& cfg, int eps_pow) {
    const PotentialModel pot = cfg.potential();
    std::ostringstream os;
    os << (cfg.example == ExampleCase::Ex1D ? "ex1d" : "ex2d");
    os << "_d" << cfg.dims();
    os << "_a" << format_g(cfg.alpha);
    os << "_e" << eps_pow;
    os << "_T" << format_g(cfg.t_final);
    os << "_dt" << format_g(cfg.ref_dt(eps_pow));
    os << "_N" << (1 << (eps_pow + 1));
    os << "_V" << static_cast<int>(pot.kind);
    for (double p : pot.params) os << "_" << format_g(p);
    std::string key = os.str();
    for (char& c : key)
        if (c == '.' || c == '+' || c == '-') c = 'm';
    return key;
}

WaveField reference_solution(const RunConfig& cfg, int eps_pow, double* runtime_s,
                             SpectralDiagnostics* diag) {
    const std::string dir = cfg.cache_dir();
    fs::create_directories(dir);
    const std::string path = dir + "/" + reference_cache_key(cfg, eps_pow) + ".fld";
    if (runtime_s) *runtime_s = 0.0;
    if (fs::exists(path)) return load_field_binary(path);

    const double eps = std::ldexp(1.0, -eps_pow);
    const WaveField grid = example_grid(cfg.example, eps_pow);
    const WaveField psi0 = wkb_initial(cfg.example, eps, grid);
    const auto t0 = std::chrono::steady_clock::now();
    WaveField ref = run_reference(psi0, cfg.potential(), eps, cfg.alpha, cfg.ref_dt(eps_pow),
                                  cfg.t_final, diag);
    if (runtime_s) *runtime_s = now_seconds_since(t0);

    const std::string tmp = path + ".tmp" + std::to_string(::getpid());
    save_field_binary(ref, tmp);
    fs::rename(tmp, path); // atomic publish; concurrent writers produce identical bytes
    return ref;
}

namespace {

template <int D> FgaParams<D> make_fga_params(const RunConfig& cfg) {
    FgaParams<D> p;
    p.symbols.kinetic = KineticModel{cfg.alpha, cfg.delta()};
    p.symbols.potential = cfg.potential();
    p.eps = cfg.eps();
    p.t_final = cfg.t_final;
    p.dt = cfg.dt_fga;
    p.dq_factor = cfg.dq_factor;
    p.cutoff.mode = cfg.cutoff_mode;
    p.cutoff.omega = cfg.omega;
    p.cutoff.prune_tol = cfg.prune_tol;
    if (cfg.cutoff_mode == CutoffSpec::Mode::ChiOmega)
        p.cutoff.stationary_points = p.symbols.potential.stationary_points_in(0.0, 2.0);
    p.workers = cfg.workers > 0 ? cfg.workers : default_workers();
    return p;
}

} // namespace

FgaRun run_fga(const RunConfig& cfg) {
    cfg.validate();
    const WaveField grid = example_grid(cfg.example, cfg.eps_pow);
    const WaveField psi0 = wkb_initial(cfg.example, cfg.eps(), grid);
    FgaRun out;
    const auto t0 = std::chrono::steady_clock::now();
    if (cfg.dims() == 1) {
        FgaSolution<1> sol = solve<1>(psi0, make_fga_params<1>(cfg));
        out.field = std::move(sol.field);
        out.diagnostics = sol.diagnostics;
    } else {
        FgaSolution<2> sol = solve<2>(psi0, make_fga_params<2>(cfg));
        out.field = std::move(sol.field);
        out.diagnostics = sol.diagnostics;
    }
    out.runtime_s = now_seconds_since(t0);
    return out;
}

ErrorRecord run_compare(const RunConfig& cfg, CompareArtifacts* artifacts) {
    cfg.validate();
    double ref_time = 0.0;
    WaveField ref = reference_solution(cfg, cfg.eps_pow, &ref_time);
    FgaRun fga = run_fga(cfg);
    const auto [abs, rel] = l2_error(fga.field, ref);
    ErrorRecord rec;
    rec.alpha = cfg.alpha;
    rec.eps = cfg.eps();
    rec.delta = cfg.delta();
    rec.l2_abs = abs;
    rec.l2_rel = rel;
    rec.runtime_fga_s = fga.runtime_s;
    rec.runtime_ref_s = ref_time;
    if (artifacts) {
        artifacts->fga_field = std::move(fga.field);
        artifacts->ref_field = std::move(ref);
        artifacts->fga_diagnostics = fga.diagnostics;
    }
    return rec;
}

SweepResult convergence_sweep(const RunConfig& base, const std::vector<double>& alphas,
                              const std::vector<int>& eps_pows, double delta_exponent) {
    if (alphas.empty() || eps_pows.empty()) throw ConfigError("empty sweep axes");
    {
        std::vector<int> sorted = eps_pows;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 1; i < sorted.size(); ++i)
            if (sorted[i] == sorted[i - 1]) throw ConfigError("duplicate eps_pow in sweep");
    }
    if (base.dims() == 2 && !base.allow_large)
        for (int pow : eps_pows)
            if (pow > 7)
                throw ConfigError("2-d sweeps beyond eps = 2^-7 are expensive; "
                                  "set allow_large to opt in");

    struct Cell {
        double alpha;
        int pow;
        std::optional<ErrorRecord> record;
        std::string error;
    };
    std::vector<Cell> cells;
    for (double a : alphas)
        for (int pow : eps_pows) cells.push_back({a, pow, std::nullopt, {}});
    // most expensive cells first for pool balance
    std::stable_sort(cells.begin(), cells.end(),
                     [](const Cell& l, const Cell& r) { return l.pow > r.pow; });

    const int total_workers = base.workers > 0 ? base.workers : default_workers();
    const int pool = std::max(1, std::min<int>(total_workers, static_cast<int>(cells.size())));
    const int inner = std::max(1, total_workers / pool);

    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    for (int w = 0; w < pool; ++w) {
        threads.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= cells.size()) break;
                RunConfig cfg = base;
                cfg.alpha = cells[i].alpha;
                cfg.eps_pow = cells[i].pow;
                cfg.delta_exponent = delta_exponent;
                cfg.workers = inner;
                try {
                    cells[i].record = run_compare(cfg);
                } catch (const std::exception& e) {
                    cells[i].error = e.what();
                }
            }
        });
    }
    for (auto& t : threads) t.join();

    SweepResult result;
    result.delta_exponent = delta_exponent;
    std::vector<std::string> failures;
    for (const Cell& c : cells) {
        if (c.record)
            result.records.push_back(*c.record);
        else
            failures.push_back("alpha=" + format_g(c.alpha) + " eps=2^-" +
                               std::to_string(c.pow) + ": " + c.error);
    }
    std::sort(result.records.begin(), result.records.end(), [](const auto& l, const auto& r) {
        if (l.alpha != r.alpha) return l.alpha < r.alpha;
        return l.eps > r.eps;
    });
    if (!failures.empty()) {
        std::string msg = "sweep cells failed:";
        for (const auto& f : failures) msg += "\n  " + f;
        throw Error(msg);
    }
    // a slope fit needs >= 3 points; shorter sweeps still produce the table
    if (eps_pows.size() >= 3) {
        for (double a : alphas) {
            std::vector<std::pair<double, double>> pts;
            for (const ErrorRecord& r : result.records)
                if (r.alpha == a && r.l2_abs > 0.0)
                    pts.emplace_back(-std::log2(r.eps), std::log2(r.l2_abs));
            result.slopes.push_back(fit_slope(a, pts));
        }
    }
    return result;
}

void write_errors_csv(const std::string& path, const std::vector<ErrorRecord>& records) {
    std::ofstream out(path);
    out << "alpha,eps,delta,l2_abs,l2_rel,runtime_fga_s,runtime_ref_s\n";
    char line[256];
    for (const ErrorRecord& r : records) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g,%.3f,%.3f\n", r.alpha,
                      r.eps, r.delta, r.l2_abs, r.l2_rel, r.runtime_fga_s, r.runtime_ref_s);
        out << line;
    }
}

void write_table_csv(const std::string& path, const std::vector<ErrorRecord>& records) {
    std::vector<double> alphas;
    std::vector<double> epses;
    for (const ErrorRecord& r : records) {
        if (std::find(alphas.begin(), alphas.end(), r.alpha) == alphas.end())
            alphas.push_back(r.alpha);
        if (std::find(epses.begin(), epses.end(), r.eps) == epses.end()) epses.push_back(r.eps);
    }
    std::sort(alphas.begin(), alphas.end());
    std::sort(epses.begin(), epses.end(), std::greater<>()); // largest eps first
    std::ofstream out(path);
    out << "alpha";
    for (double e : epses) out << ",eps=2^" << std::log2(e);
    out << "\n";
    for (double a : alphas) {
        out << a;
        for (double e : epses) {
            const auto it = std::find_if(records.begin(), records.end(), [&](const auto& r) {
                return r.alpha == a && r.eps == e;
            });
            char cell[32];
            if (it != records.end())
                std::snprintf(cell, sizeof cell, ",%.2e", it->l2_abs);
            else
                std::snprintf(cell, sizeof cell, ",");
            out << cell;
        }
        out << "\n";
    }
}

void write_slopes_csv(const std::string& path, const std::vector<SlopeFit>& slopes,
                      double delta_exponent) {
    std::ofstream out(path);
    out << "alpha,slope,intercept,n_points,delta_exponent\n";
    char line[160];
    for (const SlopeFit& s : slopes) {
        std::snprintf(line, sizeof line, "%.17g,%.6f,%.6f,%zu,%.17g\n", s.alpha, s.slope,
                      s.intercept, s.points.size(), delta_exponent);
        out << line;
    }
}

void write_summary_json(const std::string& path, const RunConfig& cfg,
                        const std::vector<ErrorRecord>& records,
                        const std::vector<SlopeFit>& slopes) {
    json j;
    j["config"] = {
        {"example", cfg.example == ExampleCase::Ex1D ? "ex1d" : "ex2d"},
        {"eps_pow", cfg.eps_pow},
        {"alpha", cfg.alpha},
        {"delta_exponent", cfg.delta_exponent},
        {"t_final", cfg.t_final},
        {"dt_fga", cfg.dt_fga},
        {"dq_factor", cfg.dq_factor},
        {"prune_tol", cfg.prune_tol},
        {"output_dir", cfg.output_dir},
    };
    if (cfg.delta_explicit) j["config"]["delta"] = *cfg.delta_explicit;
    if (cfg.dt_ref) j["config"]["dt_ref"] = *cfg.dt_ref;
    j["records"] = json::array();
    for (const ErrorRecord& r : records)
        j["records"].push_back({{"alpha", r.alpha},
                                {"eps", r.eps},
                                {"delta", r.delta},
                                {"l2_abs", r.l2_abs},
                                {"l2_rel", r.l2_rel},
                                {"runtime_fga_s", r.runtime_fga_s},
                                {"runtime_ref_s", r.runtime_ref_s}});
    j["slopes"] = json::array();
    for (const SlopeFit& s : slopes)
        j["slopes"].push_back(
            {{"alpha", s.alpha}, {"slope", s.slope}, {"intercept", s.intercept}});
    std::ofstream out(path);
    out << j.dump(2) << "\n";
}

} // namespace fracfga
