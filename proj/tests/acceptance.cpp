// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "fixtures.hpp"
#include "mvsde/chaos.hpp"
#include "mvsde/cli.hpp"
#include "mvsde/integrator.hpp"
#include "mvsde/measure.hpp"
#include "mvsde/verify.hpp"
#include "oracles/oracles.hpp"

using namespace mvsde;

namespace {

struct Outcome {
    bool pass = true;
    std::vector<std::string> lines;

    void check(bool ok, std::string what) {
        pass = pass && ok;
        lines.push_back((ok ? "ok   " : "FAIL ") + std::move(what));
    }
    void note(std::string what) { lines.push_back("     " + std::move(what)); }
};

EmpiricalMeasure pts(std::vector<double> v) { return EmpiricalMeasure::from_points(std::move(v)); }

std::vector<double> random_points(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> normal(0.0, 2.0);
    std::vector<double> v(n);
    for (double& x : v) x = normal(rng);
    return v;
}

Outcome wasserstein_oracle() {
    Outcome o;
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<std::size_t> size(1, 6);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = size(rng);
        const auto x = random_points(rng, n), y = random_points(rng, n);
        const double brute = oracle::brute_force_wasserstein(2.0, x, y);
        worst = std::max(worst, std::abs(wasserstein_1d(2.0, pts(x), pts(y)) - brute));
    }
    o.check(worst <= 1e-10, fmt::format("max |W2 - brute force| over 1000 pairs = {:.3g}", worst));
    return o;
}

Outcome identities() {
    Outcome o;
    std::mt19937_64 rng(102);
    double dirac_worst = 0.0;
    int coupling_bad = 0, triangle_bad = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + trial % 20;
        const auto x = random_points(rng, n), y = random_points(rng, n), z = random_points(rng, n);
        const auto mx = pts(x), my = pts(y), mz = pts(z);
        for (double p : {1.0, 2.0, 4.0}) {
            const double norm = mx.moment_norm(p);
            dirac_worst = std::max(dirac_worst, std::abs(wasserstein_1d(p, mx, EmpiricalMeasure::dirac_origin(n)) - norm) /
                                                    std::max(1.0, norm));
        }
        if (coupling_bound(2.0, x, y) < wasserstein_1d(2.0, mx, my) - 1e-12) ++coupling_bad;
        if (wasserstein_1d(2.0, mx, mz) > wasserstein_1d(2.0, mx, my) + wasserstein_1d(2.0, my, mz) + 1e-10)
            ++triangle_bad;
    }
    o.check(dirac_worst <= 1e-12, fmt::format("max |W_p(mu, delta_0) - ||mu||_p| = {:.3g}", dirac_worst));
    o.check(coupling_bad == 0, fmt::format("coupling bound below W2 in {} of 1000 pairs", coupling_bad));
    o.check(triangle_bad == 0, fmt::format("triangle inequality broken in {} of 1000 triples", triangle_bad));
    return o;
}

void expect_clean(Outcome& o, const AssumptionReport& r) {
    o.check(r.verdict == Verdict::pass && r.violation_count == 0,
            fmt::format("{}: {} violations in {} samples ({})", r.id, r.violation_count, r.samples,
                        verdict_name(r.verdict)));
}

Outcome example61_constants() {
    Outcome o;
    const double extremum = phi_extremum();
    o.check(extremum <= 4.0 / 9.0 + 1e-9, fmt::format("max phi = {:.15f} (4/9 = {:.15f})", extremum, 4.0 / 9.0));
    const auto model = example61();
    const std::size_t n = 100000;
    for (double R : {1.0, 5.0, 10.0}) expect_clean(o, check_local_monotonicity(model, R, n));
    expect_clean(o, check_coercivity(model, n, CoercivityMode::sharp));
    expect_clean(o, lyapunov_check(model, n));
    return o;
}

void expect_flagged(Outcome& o, const std::string& fixture_name, const AssumptionReport& r) {
    o.check(r.verdict == Verdict::fail, fmt::format("{} flagged by {}: {} violations in {} samples", fixture_name, r.id,
                                                    r.violation_count, r.samples));
}

Outcome negative_controls() {
    Outcome o;
    const std::size_t n = 20000;
    expect_flagged(o, "L(R) = 0.01", check_local_monotonicity(fixture::example61_small_local_lipschitz(), 5.0, n));
    expect_flagged(o, "L3 = 0.5", check_coercivity(fixture::example61_small_L3(), n));
    expect_flagged(o, "sharp constant 1",
                   check_coercivity(fixture::example61_small_sharp_constant(), n, CoercivityMode::sharp));
    expect_flagged(o, "L5 = 5",
                   check_coercivity(fixture::linear_overclaimed_dissipation(), n, CoercivityMode::dissipative));
    expect_flagged(o, "L2 = 0.5", check_polynomial_lipschitz(fixture::linear_small_L2(), n));
    expect_flagged(o, "L4 = 1", check_growth(fixture::example61_small_L4(), n));
    expect_flagged(o, "alpha = 0.1, beta = 0.01", lyapunov_check(fixture::example61_weak_lyapunov(), n));
    expect_flagged(o, "f = r^(1/2) + 1", lyapunov_check(fixture::example61_slow_lyapunov(), 100));
    expect_flagged(o, "p = 4", check_exponent_relations(fixture::example61_small_p().growth));
    return o;
}

void moment_oracle_at(Outcome& o, double T, double dt) {
    const LinearMeanFieldParams params;
    const std::size_t n = 10000;
    const BrownianDriver driver(2024);
    const auto model = linear_mean_field(params);
    const auto initial = sample_initial(NormalLaw{1.0, 1.0}, n, 1, driver);
    const auto traj = integrate(initial, model, {SchemeKind::tamed_euler, dt, 1}, driver, T);
    const auto& x = traj.final_state().states;

    double sum = 0.0, sum_sq = 0.0;
    for (double v : x) sum += v * v, sum_sq += v * v * v * v;
    const double second = sum / n;
    const double se = std::sqrt(std::max(0.0, sum_sq / n - second * second) / (n - 1));
    const auto ode = oracle::linear_mean_field_rk4(params.theta, params.kappa, params.sigma, {1.0, 2.0}, T);
    const double z = std::abs(second - ode.s) / se;
    o.check(z <= 3.0, fmt::format("T = {}, dt = {}: E X^2 = {:.6e}, ODE = {:.6e}, SE = {:.3e}, |diff|/SE = {:.2f}", T,
                                  dt, second, ode.s, se, z));

    const auto recursion = oracle::linear_mean_field_euler(params.theta, params.kappa, params.sigma, {1.0, 2.0}, dt,
                                                           step_count(T, dt));
    o.note(fmt::format("diagnostic: Euler moment recursion at dt = {} gives {:.6e} (|diff|/SE = {:.2f}); "
                       "ODE / recursion = {:.4f}",
                       dt, recursion.s, std::abs(second - recursion.s) / se, ode.s / recursion.s));
}

Outcome moment_oracle() {
    Outcome o;
    moment_oracle_at(o, 1.0, 1e-3);
    moment_oracle_at(o, 30.0, 2e-3);
    return o;
}

Outcome finite_horizon_chaos() {
    Outcome o;
    const auto report =
        run_chaos_sweep(example61(), 16, 6, 1.0, 100, {SchemeKind::tamed_euler, 1e-3, 1}, 42, ChaosSweepOptions{});
    o.check(!report.failure, report.failure ? *report.failure : "all levels completed");
    if (report.failure) return o;
    for (std::size_t l = 0; l < report.levels.size(); ++l)
        o.note(fmt::format("N = {:4}: error = {:.6e} +- {:.2e}", report.levels[l], report.errors[l],
                           report.std_errors[l]));
    const bool positive = std::all_of(report.errors.begin(), report.errors.end(), [](double e) { return e > 0.0; });
    o.check(positive, "errors strictly positive");
    bool monotone = true;
    for (std::size_t l = 0; l + 1 < report.errors.size(); ++l)
        monotone = monotone && report.errors[l + 1] <= report.errors[l] + report.std_errors[l] + report.std_errors[l + 1];
    o.check(monotone, "decreasing across levels within one standard error per adjacent pair");
    o.check(report.fitted_slope >= -0.7 && report.fitted_slope <= -0.3,
            fmt::format("fitted log2 slope = {:.4f} (band [-0.7, -0.3])", report.fitted_slope));
    return o;
}

Outcome long_horizon_chaos() {
    Outcome o;
    const auto model = example61();
    const auto short_run = run_chaos_sweep(model, 256, 1, 1.0, 100, {SchemeKind::tamed_euler, 1e-3, 1}, 42);
    const auto long_run = run_chaos_sweep(model, 256, 1, 30.0, 100, {SchemeKind::tamed_euler, 2e-3, 1}, 42);
    o.check(!short_run.failure && !long_run.failure, "both horizons completed");
    if (short_run.failure || long_run.failure) return o;
    const double e1 = short_run.errors[0], e30 = long_run.errors[0];
    const double combined = std::hypot(short_run.std_errors[0], long_run.std_errors[0]);
    o.check(e30 <= e1 + combined, fmt::format("N = 256: error(T=30) = {:.6e}, error(T=1) = {:.6e}, combined SE = {:.2e}",
                                              e30, e1, combined));

    // Per-particle gap of the linear mean-field system over t in [1, 30],
    // averaged over replications.
    std::vector<double> times;
    for (int t = 1; t <= 30; ++t) times.push_back(t);
    std::vector<double> mean_gap(times.size(), 0.0);
    const std::size_t reps = 20;
    for (std::size_t u = 0; u < reps; ++u) {
        const auto series = splitting_error_series(linear_mean_field(), 256, times, {SchemeKind::tamed_euler, 2e-3, 1},
                                                   BrownianDriver(derive_seed(7, u)), NormalLaw{1.0, 1.0});
        for (std::size_t k = 0; k < times.size(); ++k) mean_gap[k] += series[k] / reps;
    }
    const auto fit = fit_decay(times, mean_gap);
    o.check(fit.rate < 0.0, fmt::format("linear mean-field gap: fitted rate on [1, 30] = {:.4f} (r^2 = {:.4f}, {} used)",
                                        fit.rate, fit.r_squared, fit.used));
    return o;
}

Outcome decay_rate() {
    Outcome o;
    const LinearMeanFieldParams params;
    const double T = 16.0;
    DecayOptions options;
    const auto est = estimate_decay_rate(linear_mean_field(params), 2.0, 10000, T, options);
    std::vector<double> ode;
    for (double t : est.times) {
        const auto y = oracle::linear_mean_field_rk4(params.theta, params.kappa, params.sigma, {1.0, 2.0}, t);
        ode.push_back(y.s);
    }
    const auto ode_fit = fit_decay(est.times, ode);
    const double rel = std::abs(est.slope - ode_fit.rate) / std::abs(ode_fit.rate);
    o.check(rel <= 0.10, fmt::format("measured slope = {:.5f}, ODE slope = {:.5f}, relative gap = {:.4f}", est.slope,
                                     ode_fit.rate, rel));
    o.check(est.slope <= 0.0, "measured slope <= 0");
    o.note(fmt::format("-p(L5 - L6)/2 = {:.4f}", est.bound));
    return o;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    Outcome o;
    const auto dir = std::filesystem::temp_directory_path() / "mvsde_acceptance";
    std::filesystem::create_directories(dir);
    const auto config = cli::parse_config("run.mode = chaos-sweep\nchaos.N_1 = 16\nchaos.levels = 4\nchaos.U = 20\n");
    std::ostringstream log;
    const int default_threads = thread_count();
    auto run_to = [&](const std::string& name, int threads) {
        cli::RunOptions opts;
        opts.out = dir / name;
        opts.threads = threads;
        opts.log = &log;
        const int code = cli::run(config, opts);
        return code == cli::kSuccess ? slurp(dir / name) : std::string();
    };
    const auto a = run_to("a.csv", 1), b = run_to("b.csv", 1), c = run_to("c.csv", 4);
    o.check(!a.empty(), "runs succeeded");
    o.check(a == b, "byte-identical across two runs with equal seeds");
    o.check(a == c, "byte-identical between 1 and 4 threads");
    set_thread_count(default_threads);
    return o;
}

Outcome frozen_cauchy() {
    Outcome o;
    const auto model = example61();
    const double inner_dt = 1.0 / 1024.0;
    const BrownianDriver driver(31);
    const auto initial = sample_initial(NormalLaw{}, 256, 1, driver);

    auto path = [&](std::size_t m) {
        std::vector<std::vector<double>> states;
        IntegrateOptions opts;
        opts.on_step = [&](const Ensemble& e) { states.push_back(e.states); };
        integrate_frozen_measure(initial, model, m, inner_dt, driver, 1.0, opts);
        return states;
    };
    auto sup_rms = [](const auto& a, const auto& b) {
        double sup = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < a[k].size(); ++i) s += (a[k][i] - b[k][i]) * (a[k][i] - b[k][i]);
            sup = std::max(sup, std::sqrt(s / a[k].size()));
        }
        return sup;
    };
    std::vector<double> gaps;
    auto previous = path(4);
    for (std::size_t m = 4; m <= 32; m *= 2) {
        auto next = path(2 * m);
        gaps.push_back(sup_rms(previous, next));
        o.note(fmt::format("m = {:2} vs {:2}: sup_t RMS difference = {:.6e}", m, 2 * m, gaps.back()));
        previous = std::move(next);
    }
    bool non_increasing = true;
    for (std::size_t k = 0; k + 1 < gaps.size(); ++k) non_increasing = non_increasing && gaps[k + 1] <= gaps[k];
    o.check(non_increasing, "non-increasing over m = 4, 8, 16, 32");
    return o;
}

} // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"Wasserstein oracle equivalence", wasserstein_oracle},
        {"Identity suite", identities},
        {"example61 declared constants", example61_constants},
        {"Negative controls", negative_controls},
        {"Moment oracle", moment_oracle},
        {"Finite-horizon chaos", finite_horizon_chaos},
        {"Long-horizon chaos", long_horizon_chaos},
        {"Decay-rate bound", decay_rate},
        {"Determinism", determinism},
        {"Frozen-measure Cauchy behaviour", frozen_cauchy},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = criteria[i].second();
        } catch (const std::exception& e) {
            outcome.check(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s %2zu %s (%.1f s)\n", outcome.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, secs);
        for (const auto& line : outcome.lines) std::printf("       %s\n", line.c_str());
        std::fflush(stdout);
        failed += outcome.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
