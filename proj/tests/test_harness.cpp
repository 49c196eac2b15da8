#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "fracfga/harness.hpp"

using namespace fracfga;
namespace fs = std::filesystem;

namespace {

int call_cli(std::vector<std::string> args) {
    std::vector<char*> argv;
    args.insert(args.begin(), "fracfga");
    for (auto& a : args) argv.push_back(a.data());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

const char* kOutDir = "fracfga_test_out";

} // namespace

TEST_CASE("wkb initial data, 1-d closed form") {
    const int pow = 6;
    const double eps = std::ldexp(1.0, -pow);
    const WaveField f = wkb_initial(ExampleCase::Ex1D, eps, example_grid(ExampleCase::Ex1D, pow));
    // x = 1 is a grid point: amplitude sqrt(64/pi), phase e^{i/eps}
    const int i1 = f.n[0] / 2;
    CHECK(f.x(0, i1) == doctest::Approx(1.0).epsilon(1e-15));
    const Complex expect =
        std::sqrt(64.0 / M_PI) * Complex(std::cos(1.0 / eps), std::sin(1.0 / eps));
    CHECK(std::abs(f.values[i1] - expect) < 1e-12);

    // oracle: Gaussian integral, ||psi||^2 = (64/pi) sqrt(pi/128)
    const double expect_mass = 64.0 / M_PI * std::sqrt(M_PI / 128.0);
    CHECK(f.mass() == doctest::Approx(expect_mass).epsilon(1e-6));
}

TEST_CASE("wkb initial data, 2-d peak") {
    const int pow = 5;
    const double eps = std::ldexp(1.0, -pow);
    const WaveField f = wkb_initial(ExampleCase::Ex2D, eps, example_grid(ExampleCase::Ex2D, pow));
    const int i1 = f.n[0] / 2;
    CHECK(std::abs(f.values[f.index(i1, i1)]) == doctest::Approx(64.0 / M_PI).epsilon(1e-12));
    // oracle: product Gaussian integral, ||psi||^2 = (64/pi)^2 (pi/128)
    const double expect_mass = std::pow(64.0 / M_PI, 2.0) * (M_PI / 128.0);
    CHECK(f.mass() == doctest::Approx(expect_mass).epsilon(1e-6));
}

TEST_CASE("wkb initial data rejects coarse grids") {
    const double eps = std::ldexp(1.0, -8);
    CHECK_THROWS_AS(wkb_initial(ExampleCase::Ex1D, eps, example_grid(ExampleCase::Ex1D, 6)),
                    ResolutionError);
}

TEST_CASE("l2 error basics and naive-summation oracle") {
    WaveField a(1, {0.0, 0.0}, {2.0, 0.0}, {64, 1});
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (auto& v : a.values) v = Complex(d(rng), d(rng));
    WaveField b = a;
    {
        const auto [abs, rel] = l2_error(a, b);
        CHECK(abs == 0.0);
        CHECK(rel == 0.0);
    }
    WaveField zero(1, {0.0, 0.0}, {2.0, 0.0}, {64, 1});
    {
        const auto [abs, rel] = l2_error(a, zero);
        CHECK(abs > 0.0);
        CHECK(std::isinf(rel));
    }
    for (auto& v : b.values) v = Complex(d(rng), d(rng));
    {
        // oracle: plain double-loop accumulation
        double diff2 = 0.0, ref2 = 0.0;
        for (std::size_t i = 0; i < a.values.size(); ++i) {
            const Complex e = a.values[i] - b.values[i];
            diff2 += e.real() * e.real() + e.imag() * e.imag();
            ref2 += std::norm(b.values[i]);
        }
        const double abs_expect = std::sqrt(diff2 * a.dx(0));
        const double rel_expect = abs_expect / std::sqrt(ref2 * a.dx(0));
        const auto [abs, rel] = l2_error(a, b);
        CHECK(abs == doctest::Approx(abs_expect).epsilon(1e-12));
        CHECK(rel == doctest::Approx(rel_expect).epsilon(1e-12));
    }
}

TEST_CASE("slope fitter is exact on geometric sequences") {
    {
        // errors exactly halving per eps halving
        std::vector<std::pair<double, double>> pts;
        for (int pow = 6; pow <= 9; ++pow)
            pts.emplace_back(pow, std::log2(0.375 * std::ldexp(1.0, -pow)));
        const SlopeFit fit = fit_slope(1.5, pts);
        CHECK(fit.slope == doctest::Approx(1.0).epsilon(1e-12));
        // residuals vanish: every point sits on the fitted line
        for (const auto& [x, y] : pts)
            CHECK(y == doctest::Approx(fit.intercept - fit.slope * x).epsilon(1e-10));
    }
    {
        // decay rate 1.37
        std::vector<std::pair<double, double>> pts;
        for (int pow = 4; pow <= 8; ++pow) pts.emplace_back(pow, 3.0 - 1.37 * pow);
        CHECK(fit_slope(1.1, pts).slope == doctest::Approx(1.37).epsilon(1e-12));
    }
    CHECK_THROWS_AS(fit_slope(1.5, {{6.0, -1.0}, {7.0, -2.0}}), ConfigError);
}

TEST_CASE("reference cache keys separate every relevant parameter") {
    RunConfig cfg;
    cfg.alpha = 1.1;
    const std::string base = reference_cache_key(cfg, 6);
    {
        RunConfig other = cfg;
        other.alpha = 1.3; // the reference depends on alpha: key must differ
        CHECK(reference_cache_key(other, 6) != base);
    }
    CHECK(reference_cache_key(cfg, 7) != base);
    {
        RunConfig other = cfg;
        other.example = ExampleCase::Ex2D;
        CHECK(reference_cache_key(other, 6) != base);
    }
    {
        RunConfig other = cfg;
        other.t_final = 0.125;
        CHECK(reference_cache_key(other, 6) != base);
    }
    {
        RunConfig other = cfg;
        other.dt_ref = 1e-5;
        CHECK(reference_cache_key(other, 6) != base);
    }
    {
        RunConfig other = cfg; // delta must NOT enter the key
        other.delta_exponent = 0.5454;
        CHECK(reference_cache_key(other, 6) == base);
    }
}

TEST_CASE("delta rules") {
    RunConfig cfg;
    cfg.eps_pow = 6;
    cfg.delta_exponent = 1.0;
    CHECK(cfg.delta() == doctest::Approx(cfg.eps()).epsilon(1e-15));
    cfg.delta_exponent = 6.0 / 11.0;
    CHECK(cfg.delta() == doctest::Approx(std::pow(cfg.eps(), 6.0 / 11.0)).epsilon(1e-15));
    cfg.delta_explicit = 0.025;
    CHECK(cfg.delta() == 0.025);
}

TEST_CASE("config json round trip and validation") {
    fs::create_directories(kOutDir);
    const std::string path = std::string(kOutDir) + "/cfg.json";
    {
        std::ofstream out(path);
        out << R"({"example":"ex1d","eps_pow":7,"alpha":1.3,"delta_exponent":0.5454,)"
            << R"("t_final":0.25,"dt_fga":0.01,"dq_factor":0.5,"prune_tol":1e-7,)"
            << R"("output_dir":")" << kOutDir << R"(","workers":2,)"
            << R"("potential":{"name":"harmonic1d","params":[0.5]}})";
    }
    const RunConfig cfg = RunConfig::from_json_file(path);
    CHECK(cfg.eps_pow == 7);
    CHECK(cfg.alpha == 1.3);
    CHECK(cfg.delta_exponent == doctest::Approx(0.5454));
    CHECK(cfg.workers == 2);
    REQUIRE(cfg.potential_override.has_value());
    CHECK(cfg.potential().kind == PotentialKind::Harmonic1DShifted);
    CHECK_NOTHROW(cfg.validate());

    RunConfig bad = cfg;
    bad.alpha = 2.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.eps_pow = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_file("does_not_exist.json"), ConfigError);

    const std::string broken = std::string(kOutDir) + "/broken.json";
    {
        std::ofstream out(broken);
        out << "{not json";
    }
    CHECK_THROWS_AS(RunConfig::from_json_file(broken), ConfigError);
}

TEST_CASE("compare at benchmark settings and cache reuse") {
    RunConfig cfg;
    cfg.example = ExampleCase::Ex1D;
    cfg.eps_pow = 6;
    cfg.alpha = 1.5;
    cfg.workers = 2;
    cfg.output_dir = kOutDir;
    const ErrorRecord first = run_compare(cfg);
    CHECK(first.l2_abs > 1e-4);
    CHECK(first.l2_abs < 0.1);
    CHECK(first.l2_rel < 0.1);
    CHECK(first.delta == doctest::Approx(cfg.eps()));

    const ErrorRecord again = run_compare(cfg);
    CHECK(again.runtime_ref_s == 0.0); // cache hit
    CHECK(again.l2_abs == first.l2_abs);
}

TEST_CASE("sweep guards") {
    RunConfig cfg;
    cfg.example = ExampleCase::Ex2D;
    cfg.output_dir = kOutDir;
    CHECK_THROWS_AS(convergence_sweep(cfg, {1.5}, {6, 8}, 1.0), ConfigError);
    CHECK_THROWS_AS(convergence_sweep(cfg, {1.5}, {6, 6}, 1.0), ConfigError);
    CHECK_THROWS_AS(convergence_sweep(cfg, {}, {6}, 1.0), ConfigError);
}

TEST_CASE("csv writers") {
    fs::create_directories(kOutDir);
    std::vector<ErrorRecord> recs;
    for (int pow : {6, 7, 8}) {
        ErrorRecord r;
        r.alpha = 1.5;
        r.eps = std::ldexp(1.0, -pow);
        r.delta = r.eps;
        r.l2_abs = 0.7 * r.eps;
        r.l2_rel = r.l2_abs / 1.7;
        recs.push_back(r);
    }
    const std::string errs = std::string(kOutDir) + "/errors.csv";
    write_errors_csv(errs, recs);
    {
        std::ifstream in(errs);
        std::string header;
        std::getline(in, header);
        CHECK(header == "alpha,eps,delta,l2_abs,l2_rel,runtime_fga_s,runtime_ref_s");
        int rows = 0;
        for (std::string line; std::getline(in, line);) ++rows;
        CHECK(rows == 3);
    }
    const std::string table = std::string(kOutDir) + "/table.csv";
    write_table_csv(table, recs);
    {
        std::ifstream in(table);
        std::string header;
        std::getline(in, header);
        CHECK(header.find("alpha") == 0);
        CHECK(header.find("eps=2^-6") != std::string::npos);
        std::string row;
        std::getline(in, row);
        CHECK(row.find("1.5") == 0);
    }
    std::vector<std::pair<double, double>> pts{{6, -6.5}, {7, -7.5}, {8, -8.5}};
    write_slopes_csv(std::string(kOutDir) + "/slopes.csv", {fit_slope(1.5, pts)}, 1.0);
    {
        std::ifstream in(std::string(kOutDir) + "/slopes.csv");
        std::string header, row;
        std::getline(in, header);
        std::getline(in, row);
        CHECK(header == "alpha,slope,intercept,n_points,delta_exponent");
        CHECK(row.find("1.5,1.0") == 0);
    }
}

TEST_CASE("cli usage and smoke paths") {
    CHECK(call_cli({"compare", "--definitely-not-a-flag"}) == 2);
    CHECK(call_cli({"no-such-command"}) == 2);
    CHECK(call_cli({"--help"}) == 0);
    CHECK(call_cli({"compare", "--example", "ex1d", "--eps-pow", "6", "--alpha", "1.5",
                    "--workers", "2", "--output-dir", kOutDir}) == 0);
    CHECK(fs::exists(std::string(kOutDir) + "/errors.csv"));
    CHECK(fs::exists(std::string(kOutDir) + "/summary.json"));
    // config errors surface as exit code 2
    CHECK(call_cli({"compare", "--example", "ex1d", "--alpha", "3.0"}) == 2);
}
