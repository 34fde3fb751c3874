#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mvsde/chaos.hpp"

using namespace mvsde;

namespace {

// dX = -X dt + dW, no measure dependence.
CoefficientModel pure_sde() {
    CoefficientModel m;
    m.name = "ou";
    m.drift = [](std::span<const double> x, const EmpiricalMeasure&, std::span<double> out) { out[0] = -x[0]; };
    m.diffusion = [](auto, const EmpiricalMeasure&, std::span<double> out) { out[0] = 1.0; };
    return m;
}

double tamed_step(double x, double m, double dw, double dt) {
    double b = -x - x * m * m, s = x + m;
    b /= 1.0 + dt * std::abs(b);
    s /= std::sqrt(1.0 + dt * s * s);
    return x + b * dt + s * dw;
}

} // namespace

TEST(Splitting, MeasureFreeModelHasNoChaosError) {
    for (auto kind : {SchemeKind::tamed_euler, SchemeKind::explicit_euler}) {
        for (std::size_t n : {2u, 16u, 128u}) {
            const BrownianDriver driver(n);
            EXPECT_EQ(splitting_error(pure_sde(), n, 1.0, {kind, 0.01, 1}, driver), 0.0);
        }
    }
    const ChaosReport r = run_chaos_sweep(pure_sde(), 4, 3, 0.5, 3, {SchemeKind::tamed_euler, 0.01, 1}, 9);
    for (double e : r.errors) EXPECT_EQ(e, 0.0);
}

TEST(Splitting, TwoParticlesOneStepByHand) {
    const BrownianDriver driver(21);
    const double dt = 0.1;
    double z1[1], z2[1], w1[1], w2[1];
    driver.initial_normals(1, z1);
    driver.initial_normals(2, z2);
    driver.increment(1, 0, dt, w1);
    driver.increment(2, 0, dt, w2);
    const double m = 0.5 * (z1[0] + z2[0]);
    const double full1 = tamed_step(z1[0], m, w1[0], dt), full2 = tamed_step(z2[0], m, w2[0], dt);
    const double half1 = tamed_step(z1[0], z1[0], w1[0], dt), half2 = tamed_step(z2[0], z2[0], w2[0], dt);
    const double expected = std::sqrt(0.5 * ((full1 - half1) * (full1 - half1) + (full2 - half2) * (full2 - half2)));
    const double got = splitting_error(mean_square_model(), 2, dt, {SchemeKind::tamed_euler, dt, 1}, driver);
    EXPECT_NEAR(got, expected, 1e-14);
    EXPECT_GT(got, 0.0);
}

TEST(Splitting, SplitSystemsReuseEveryIncrementExactly) {
    BrownianDriver driver(22);
    auto tally = std::make_shared<DrawTally>();
    driver.attach_tally(tally);
    const std::size_t n = 8, steps = 10;
    splitting_error(example61(), n, 0.1, {SchemeKind::tamed_euler, 0.01, 1}, driver);
    const auto counts = tally->counts();
    EXPECT_EQ(counts.size(), n * steps);
    for (ParticleId id = 1; id <= n; ++id)
        for (StepIndex k = 0; k < steps; ++k) EXPECT_EQ(counts.at({id, k}), 2u) << "id " << id << " step " << k;
    EXPECT_EQ(tally->total(), 2 * n * steps);
}

TEST(Splitting, InvariantUnderRelabelingWithinHalves) {
    const BrownianDriver driver(23);
    const SchemeConfig scheme{SchemeKind::tamed_euler, 1e-3, 1};
    const auto e0 = sample_initial(NormalLaw{}, 12, 1, driver);
    const double base = splitting_error(example61(), e0, 0.5, scheme, driver);
    const std::vector<std::size_t> order{4, 0, 5, 2, 1, 3, 9, 11, 6, 10, 8, 7};
    Ensemble shuffled = e0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        shuffled.states[i] = e0.states[order[i]];
        shuffled.ids[i] = e0.ids[order[i]];
    }
    EXPECT_NEAR(splitting_error(example61(), shuffled, 0.5, scheme, driver), base, 1e-12 * base);
    EXPECT_EQ(splitting_error(example61(), 12, 0.5, scheme, driver), base);
}

TEST(Splitting, OddOrTinySystemsAreRejected) {
    const BrownianDriver driver(1);
    EXPECT_THROW(splitting_error(example61(), 15, 1.0, {}, driver), std::invalid_argument);
    EXPECT_THROW(splitting_error(example61(), 0, 1.0, {}, driver), std::invalid_argument);
    EXPECT_THROW(run_chaos_sweep(example61(), 15, 2, 1.0, 2, {}, 1), std::invalid_argument);
}

TEST(Splitting, SeriesEndsWithTerminalError) {
    const BrownianDriver driver(24);
    const SchemeConfig scheme{SchemeKind::tamed_euler, 0.01, 1};
    const std::vector<double> times{0.0, 0.25, 0.5, 1.0};
    const auto series = splitting_error_series(linear_mean_field(), 32, times, scheme, driver);
    ASSERT_EQ(series.size(), 4u);
    EXPECT_EQ(series[0], 0.0);
    EXPECT_EQ(series.back(), splitting_error(linear_mean_field(), 32, 1.0, scheme, driver));
}

TEST(Sweep, SingleReplicationSingleLevelIsOneSplittingError) {
    const SchemeConfig scheme{SchemeKind::tamed_euler, 1e-3, 1};
    const auto r = run_chaos_sweep(example61(), 16, 1, 1.0, 1, scheme, 42);
    ASSERT_EQ(r.errors.size(), 1u);
    EXPECT_EQ(r.errors[0], splitting_error(example61(), 16, 1.0, scheme, BrownianDriver(derive_seed(42, 0))));
    EXPECT_EQ(r.std_errors[0], 0.0);
    EXPECT_TRUE(r.slopes.empty());
    EXPECT_TRUE(std::isnan(r.fitted_slope));
}

TEST(Sweep, LevelsDoubleAndErrorsCarryStandardErrors) {
    const auto r = run_chaos_sweep(example61(), 8, 4, 0.5, 8, {SchemeKind::tamed_euler, 1e-2, 1}, 3);
    EXPECT_EQ(r.levels, (std::vector<std::size_t>{8, 16, 32, 64}));
    ASSERT_EQ(r.errors.size(), 4u);
    ASSERT_EQ(r.std_errors.size(), 4u);
    ASSERT_EQ(r.slopes.size(), 3u);
    for (std::size_t l = 0; l < 4; ++l) {
        EXPECT_GT(r.errors[l], 0.0);
        EXPECT_GT(r.std_errors[l], 0.0);
    }
    EXPECT_FALSE(r.failure.has_value());
    EXPECT_DOUBLE_EQ(r.horizon, 0.5);
    EXPECT_EQ(r.replications, 8u);
}

TEST(Sweep, IndependentOfThreadCount) {
    const SchemeConfig scheme{SchemeKind::tamed_euler, 1e-2, 1};
    set_thread_count(1);
    const auto one = run_chaos_sweep(example61(), 8, 3, 0.5, 6, scheme, 5);
    set_thread_count(4);
    const auto four = run_chaos_sweep(example61(), 8, 3, 0.5, 6, scheme, 5);
    EXPECT_EQ(one.errors, four.errors);
    EXPECT_EQ(one.std_errors, four.std_errors);
}

TEST(Sweep, FailingLevelKeepsCompletedLevels) {
    CoefficientModel fragile = mean_square_model();
    fragile.drift = [](std::span<const double> x, const EmpiricalMeasure& mu, std::span<double> out) {
        out[0] = mu.size() >= 64 ? std::numeric_limits<double>::quiet_NaN() : -x[0];
    };
    const auto r = run_chaos_sweep(fragile, 32, 4, 0.1, 2, {SchemeKind::tamed_euler, 0.01, 1}, 1);
    ASSERT_TRUE(r.failure.has_value());
    EXPECT_TRUE(r.blow_up);
    EXPECT_EQ(r.levels, (std::vector<std::size_t>{32}));
    EXPECT_NE(r.failure->find("N = 64"), std::string::npos) << *r.failure;
}

TEST(Decoupled, MeasureFreeModelHasNoGap) {
    const BrownianDriver driver(30);
    const auto r = decoupled_error(pure_sde(), 16, 16 * 64, 1.0, {SchemeKind::tamed_euler, 0.01, 1}, driver);
    EXPECT_EQ(r.error, 0.0);
    EXPECT_TRUE(r.warnings.empty());
}

TEST(Decoupled, WarnsWhenReferenceCloudIsSmall) {
    const BrownianDriver driver(31);
    const auto r = decoupled_error(linear_mean_field(), 16, 64, 0.1, {SchemeKind::tamed_euler, 0.01, 1}, driver);
    ASSERT_EQ(r.warnings.size(), 1u);
    EXPECT_NE(r.warnings[0].find("8N = 128"), std::string::npos);
    EXPECT_THROW(decoupled_error(linear_mean_field(), 16, 0, 0.1, {}, driver), std::invalid_argument);
    EXPECT_THROW(decoupled_error(linear_mean_field(), 16, 128, 0.1, {SchemeKind::frozen_measure_tamed, 0.01, 1},
                                 driver),
                 std::invalid_argument);
}

TEST(Decoupled, LinearMeanFieldGapDecaysLikeInverseSqrtN) {
    ChaosSweepOptions opts;
    opts.estimator = ChaosEstimator::decoupled;
    const auto r = run_chaos_sweep(linear_mean_field(), 16, 4, 1.0, 20, {SchemeKind::tamed_euler, 0.01, 1}, 7, opts);
    ASSERT_EQ(r.errors.size(), 4u);
    EXPECT_GT(r.fitted_slope, -0.8);
    EXPECT_LT(r.fitted_slope, -0.2);
}

TEST(Decoupled, SameOrderAsSplittingOnExample61) {
    ChaosSweepOptions opts;
    opts.estimator = ChaosEstimator::decoupled;
    const SchemeConfig scheme{SchemeKind::tamed_euler, 1e-2, 1};
    const auto dec = run_chaos_sweep(example61(), 16, 3, 1.0, 10, scheme, 8, opts);
    const auto spl = run_chaos_sweep(example61(), 16, 3, 1.0, 10, scheme, 8);
    for (std::size_t l = 0; l < 3; ++l) {
        const double ratio = dec.errors[l] / spl.errors[l];
        EXPECT_GT(ratio, 0.1) << "N = " << dec.levels[l];
        EXPECT_LT(ratio, 10.0) << "N = " << dec.levels[l];
    }
}

TEST(PhiRate, FormulaValues) {
    EXPECT_NEAR(phi_rate(4, 1, 8), 0.5 + std::pow(4.0, -0.75), 1e-15);
    EXPECT_NEAR(phi_rate(4, 1, 8), 0.8535533906, 1e-10);
    EXPECT_NEAR(phi_rate(1, 4, 8), std::log(2.0) + 1.0, 1e-15);
    EXPECT_NEAR(phi_rate(64, 6, 3), 0.25 + std::pow(64.0, -1.0 / 3.0), 1e-15);
}

TEST(PhiRate, StrictlyDecreasingInN) {
    for (int d : {1, 3, 4, 5, 8}) {
        double prev = std::numeric_limits<double>::infinity();
        for (double n = 1; n <= 1 << 20; n *= 2) {
            const double v = phi_rate(n, d, 6.0);
            if (n > 1) {
                EXPECT_LT(v, prev) << "d = " << d << " N = " << n;
            }
            prev = v;
        }
    }
}

TEST(PhiRate, ExcludedExponentsAreRejected) {
    EXPECT_THROW(phi_rate(10, 2, 4.0), std::invalid_argument);
    EXPECT_THROW(phi_rate(10, 6, 1.5), std::invalid_argument);
    EXPECT_THROW(phi_rate(10, 1, 2.0), std::invalid_argument);
    EXPECT_THROW(phi_rate(0.5, 1, 3.0), std::invalid_argument);
}

TEST(FitDecay, ExactExponential) {
    std::vector<double> t, v;
    for (int i = 0; i <= 20; ++i) {
        t.push_back(0.1 * i);
        v.push_back(std::exp(-3.0 * 0.1 * i));
    }
    const auto fit = fit_decay(t, v);
    EXPECT_NEAR(fit.rate, -3.0, 1e-12);
    EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
    EXPECT_EQ(fit.used, 21u);
}

TEST(FitDecay, ConstantSeries) {
    const std::vector<double> t{0, 1, 2, 3}, v{2.5, 2.5, 2.5, 2.5};
    const auto fit = fit_decay(t, v);
    EXPECT_NEAR(fit.rate, 0.0, 1e-15);
    EXPECT_NEAR(fit.intercept, std::log(2.5), 1e-15);
}

TEST(FitDecay, NonPositiveObservationsAreDroppedWithWarning) {
    const std::vector<double> t{0, 1, 2, 3, 4}, v{1.0, 0.0, std::exp(-2.0), -1.0, std::exp(-4.0)};
    const auto fit = fit_decay(t, v);
    EXPECT_EQ(fit.excluded, 2u);
    EXPECT_EQ(fit.warnings.size(), 1u);
    EXPECT_NEAR(fit.rate, -1.0, 1e-12);
    const std::vector<double> few{1.0, 0.0, 0.0, 0.0, 2.0};
    EXPECT_THROW(fit_decay(t, few), std::invalid_argument);
}
