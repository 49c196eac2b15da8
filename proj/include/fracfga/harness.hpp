#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fracfga/fbi.hpp"
#include "fracfga/fga.hpp"
#include "fracfga/spectral.hpp"
#include "fracfga/symbols.hpp"
#include "fracfga/wavefield.hpp"

namespace fracfga {

enum class ExampleCase { Ex1D, Ex2D };

/// Full run description. eps is always a power of two (held as the exponent)
/// so that log2-based convergence bookkeeping is exact.
struct RunConfig {
    ExampleCase example = ExampleCase::Ex1D;
    int eps_pow = 6; // eps = 2^-eps_pow
    double alpha = 1.5;
    double delta_exponent = 1.0; // delta = eps^k
    std::optional<double> delta_explicit;
    double t_final = 0.25;
    double dt_fga = 1e-2;
    std::optional<double> dt_ref; // default eps^2
    double dq_factor = 0.5;       // dq = dp = dq_factor * sqrt(eps)
    double prune_tol = 1e-7;
    CutoffSpec::Mode cutoff_mode = CutoffSpec::Mode::MassThreshold;
    double omega = 0.5;
    std::string output_dir = "fga_out";
    std::optional<std::string> ref_cache_dir; // default output_dir + "/ref_cache"
    int workers = 0;                          // 0 = env/default
    std::optional<PotentialModel> potential_override;
    std::vector<double> alphas{1.1, 1.3, 1.5, 1.7, 1.9}; // sweep rows
    std::vector<int> eps_pows;                           // sweep columns; default per dims
    bool allow_large = false; // permit 2-d eps columns beyond the desk-scale default

    double eps() const { return std::ldexp(1.0, -eps_pow); }
    double delta() const;
    double delta_for(int pow) const;
    int dims() const { return example == ExampleCase::Ex1D ? 1 : 2; }
    double ref_dt(int pow) const;
    PotentialModel potential() const;
    std::string cache_dir() const;
    std::vector<int> sweep_eps_pows() const;

    void validate() const;
    static RunConfig from_json_file(const std::string& path);
};

/// WKB data of the two benchmark cases sampled on the given grid.
WaveField wkb_initial(ExampleCase example, double eps, const WaveField& grid_template);
/// [0,2]^d grid with dx = eps (n = 2^{eps_pow+1} per dim).
WaveField example_grid(ExampleCase example, int eps_pow);

struct ErrorRecord {
    double alpha = 0.0, eps = 0.0, delta = 0.0;
    double l2_abs = 0.0, l2_rel = 0.0;
    double runtime_fga_s = 0.0, runtime_ref_s = 0.0;
};

/// Least-squares fit of log2(error) against -log2(eps). slope is reported as
/// the decay rate: errors halving per eps-halving give slope = +1.
struct SlopeFit {
    double alpha = 0.0;
    std::vector<std::pair<double, double>> points; // (-log2 eps, log2 error)
    double slope = 0.0;
    double intercept = 0.0;
};

SlopeFit fit_slope(double alpha, const std::vector<std::pair<double, double>>& points);

/// Cache key for a reference field; includes everything the reference depends
/// on (notably alpha) and nothing it does not (notably delta).
std::string reference_cache_key(const RunConfig& cfg, int eps_pow);

/// Reference solution via cache; runtime_s is 0 on a cache hit.
WaveField reference_solution(const RunConfig& cfg, int eps_pow, double* runtime_s = nullptr,
                             SpectralDiagnostics* diag = nullptr);

struct CompareArtifacts {
    WaveField fga_field;
    WaveField ref_field;
    FgaDiagnostics fga_diagnostics;
};

/// Runs FGA and the spectral reference on the same grid and measures the
/// discrete L2 distance.
ErrorRecord run_compare(const RunConfig& cfg, CompareArtifacts* artifacts = nullptr);

/// FGA solve alone (dimension dispatched); the field plus diagnostics.
struct FgaRun {
    WaveField field;
    FgaDiagnostics diagnostics;
    double runtime_s = 0.0;
};
FgaRun run_fga(const RunConfig& cfg);

struct SweepResult {
    std::vector<ErrorRecord> records; // sorted by (alpha, eps descending)
    std::vector<SlopeFit> slopes;     // one per alpha
    double delta_exponent = 1.0;
};

/// Error matrix over alphas x eps_pows at a fixed delta rule, with per-alpha
/// slope fits. Cells run as independent jobs on a small pool.
SweepResult convergence_sweep(const RunConfig& base, const std::vector<double>& alphas,
                              const std::vector<int>& eps_pows, double delta_exponent);

void write_errors_csv(const std::string& path, const std::vector<ErrorRecord>& records);
/// Matrix layout: one row per alpha, one column per eps.
void write_table_csv(const std::string& path, const std::vector<ErrorRecord>& records);
void write_slopes_csv(const std::string& path, const std::vector<SlopeFit>& slopes,
                      double delta_exponent);
void write_summary_json(const std::string& path, const RunConfig& cfg,
                        const std::vector<ErrorRecord>& records,
                        const std::vector<SlopeFit>& slopes);

/// Invariant battery behind `selftest`; prints one line per check.
/// Returns the number of failed checks.
int run_property_suite(std::ostream& out);

/// CLI entry point: run-fga | run-ref | compare | sweep | selftest.
/// Exit codes: 0 success, 1 solver error, 2 configuration/usage error.
int cli_main(int argc, char** argv);

} // namespace fracfga
