#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "mvsde/model.hpp"

using namespace mvsde;

namespace {

EmpiricalMeasure pts(std::vector<double> v) { return EmpiricalMeasure::from_points(std::move(v)); }

EmpiricalMeasure with_mean(double m) { return pts({m}); }

} // namespace

TEST(Example61, DriftValues) {
    const auto model = example61();
    EXPECT_DOUBLE_EQ(eval_drift(model, 0.0, with_mean(0.0)), 2.0);
    EXPECT_DOUBLE_EQ(eval_drift(model, 1.0, with_mean(0.0)), -16.0);
    EXPECT_DOUBLE_EQ(eval_drift(model, -1.0, with_mean(1.0)), 21.0);
    // cbrt(8) * 2^4 = 32.
    EXPECT_DOUBLE_EQ(eval_drift(model, 8.0, pts({1.0, 3.0})), -18.0 * 32768.0 - 32.0 + 2.0);
}

TEST(Example61, DiffusionValues) {
    const auto model = example61();
    EXPECT_DOUBLE_EQ(eval_diffusion(model, 0.0, with_mean(0.0)), 0.0);
    EXPECT_DOUBLE_EQ(eval_diffusion(model, 2.0, with_mean(1.0)), 5.0);
}

TEST(Example61, ConstantTermBreaksOddSymmetryByFour) {
    const auto model = example61();
    std::mt19937_64 rng(11);
    std::normal_distribution<double> normal(0.0, 1.5);
    for (int i = 0; i < 1000; ++i) {
        const double a = normal(rng);
        const auto mu = pts({a, -a});
        const double x = normal(rng);
        const double plus = eval_drift(model, x, mu);
        EXPECT_NEAR(eval_drift(model, -x, mu), -plus + 4.0, 1e-12 * (1.0 + std::abs(plus)));
    }
}

TEST(MeanSquare, Values) {
    const auto model = mean_square_model();
    EXPECT_DOUBLE_EQ(eval_diffusion(model, 1.0, with_mean(1.0)), 2.0);
    EXPECT_DOUBLE_EQ(eval_drift(model, 2.0, with_mean(3.0)), -2.0 - 18.0);
}

TEST(LinearMeanField, ValuesAndDissipation) {
    const auto model = linear_mean_field();
    EXPECT_DOUBLE_EQ(eval_drift(model, 1.0, pts({0.0, 4.0})), -2.0 + 1.0);
    EXPECT_DOUBLE_EQ(eval_diffusion(model, 3.0, with_mean(7.0)), 1.5);
    ASSERT_TRUE(model.growth.dissipation.has_value());
    // -2 theta + sigma^2 + |kappa| = -3.25
    EXPECT_DOUBLE_EQ(model.growth.dissipation->L5, 3.25);
    EXPECT_DOUBLE_EQ(model.growth.dissipation->L6, 0.5);
    EXPECT_NO_THROW(model.validate());
}

TEST(LinearMeanField, WeakDampingHasNoDissipation) {
    EXPECT_FALSE(linear_mean_field({0.1, 0.5, 0.5}).growth.dissipation.has_value());
}

TEST(DoubleKernel, ConstantKernelGivesMeasureFreeDrift) {
    const auto model = double_kernel_model(
        "constant", {1, 1}, [](auto, auto, auto, std::span<double> out) { out[0] = 2.5; },
        [](auto, auto, std::span<double> out) { out[0] = 0.0; }, GrowthMeta{});
    for (const auto& mu : {pts({0.0}), pts({-3, 1, 8}), pts({100, 200})})
        EXPECT_DOUBLE_EQ(eval_drift(model, 0.7, mu), 2.5);
}

TEST(DoubleKernel, DefaultKernelAgreesWithMeanSquareForm) {
    const auto kernel = default_double_kernel();
    const auto direct = mean_square_model();
    std::mt19937_64 rng(12);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> atoms(1 + i % 7);
        for (double& a : atoms) a = normal(rng);
        const auto mu = pts(atoms);
        const double x = 3.0 * normal(rng);
        const double b = eval_drift(direct, x, mu);
        EXPECT_NEAR(eval_drift(kernel, x, mu), b, 1e-12 * (1.0 + std::abs(b)));
        EXPECT_NEAR(eval_diffusion(kernel, x, mu), eval_diffusion(direct, x, mu), 1e-12 * (1.0 + std::abs(x)));
    }
}

TEST(Builtins, GrowthConformance) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> ux(-10.0, 10.0), scale(0.0, 1.5);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto which : {BuiltinModel::example61, BuiltinModel::mean_square, BuiltinModel::double_kernel,
                       BuiltinModel::linear_mean_field}) {
        const auto model = make_builtin(which);
        const auto& g = model.growth;
        const int samples = which == BuiltinModel::double_kernel ? 10000 : 100000;
        for (int i = 0; i < samples; ++i) {
            std::vector<double> atoms(1 + i % 5);
            const double s = scale(rng);
            for (double& a : atoms) a = s * normal(rng);
            const auto mu = pts(atoms);
            const double x = ux(rng);
            const double b = std::abs(eval_drift(model, x, mu));
            const double sig = std::abs(eval_diffusion(model, x, mu));
            const double b_bound = g.L4 * (1.0 + std::pow(std::abs(x), g.l3) + mu.raw_moment(g.l3));
            const double s_bound = g.L4 * (1.0 + std::pow(std::abs(x), g.l4) + mu.moment_norm(2.0));
            ASSERT_LE(b, b_bound * (1 + 1e-12)) << builtin_name(which) << " x = " << x;
            ASSERT_LE(sig, s_bound * (1 + 1e-12)) << builtin_name(which) << " x = " << x;
        }
    }
}

TEST(Builtins, NamesRoundTrip) {
    for (auto which : {BuiltinModel::example61, BuiltinModel::mean_square, BuiltinModel::double_kernel,
                       BuiltinModel::linear_mean_field}) {
        EXPECT_EQ(parse_builtin(builtin_name(which)), which);
        EXPECT_NO_THROW(make_builtin(which).validate());
    }
    EXPECT_THROW(parse_builtin("example62"), std::invalid_argument);
}

TEST(CoefficientModel, ValidateRejectsInconsistentMetadata) {
    auto m = example61();
    m.growth.gamma = 1.5;
    EXPECT_THROW(m.validate(), std::invalid_argument);
    m = example61();
    m.growth.l3 = 0.5;
    EXPECT_THROW(m.validate(), std::invalid_argument);
    m = linear_mean_field();
    m.growth.dissipation->L6 = 4.0;
    EXPECT_THROW(m.validate(), std::invalid_argument);
    m = example61();
    m.lyapunov->alpha = 0.0;
    EXPECT_THROW(m.validate(), std::invalid_argument);
}

TEST(Evaluation, NonFiniteOutputNamesTheInputs) {
    auto m = example61();
    m.drift = [](std::span<const double> x, const EmpiricalMeasure&, std::span<double> out) { out[0] = 1.0 / x[0]; };
    try {
        eval_drift(m, 0.0, with_mean(2.0));
        FAIL() << "expected NonFiniteError";
    } catch (const NonFiniteError& e) {
        EXPECT_NE(std::string(e.what()).find("mean = (2)"), std::string::npos) << e.what();
    }
    EXPECT_THROW(eval_drift(example61(), NAN, with_mean(0.0)), NonFiniteError);
}

TEST(Evaluation, DimensionMismatchIsRejected) {
    const std::vector<double> planar{1.0, 2.0};
    EXPECT_THROW(eval_drift(example61(), planar, with_mean(0.0)), std::invalid_argument);
}
