#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvsde/measure.hpp"
#include "mvsde/polynomial.hpp"

namespace mvsde {

struct ModelDims {
    std::size_t state = 1; // d
    std::size_t noise = 1; // m1
};

// 2<x,b> + (p-1)||sigma||^2 <= constant + x_coeff |x|^2 + measure_coeff ||mu||_2^2
struct CoercivityBound {
    double p = 2.0;
    double constant = 0.0;
    double x_coeff = 0.0;
    double measure_coeff = 0.0;
};

// 2<x,b> + (p-1)||sigma||^2 <= -L5 |x|^2 + L6 ||mu||_2^2, L5 > L6 > 0.
struct Dissipation {
    double L5 = 0.0;
    double L6 = 0.0;
    double p = 2.0;

    CoercivityBound as_bound() const { return {p, 0.0, -L5, L6}; }
};

// Declared growth constants. They are claims made by whoever wrote the model;
// the verify module samples them rather than trusting them.
struct GrowthMeta {
    // local monotonicity: L(R), L1, gamma, q
    PowerSum local_lipschitz = PowerSum::constant(1.0);
    double L1 = 1.0;
    double gamma = 2.0;
    double q = 2.0;
    // polynomial Lipschitz: L2, l1 (drift), l2 (diffusion in state)
    double L2 = 1.0;
    double l1 = 1.0;
    double l2 = 1.0;
    // coercivity: L3 with exponent p
    double L3 = 1.0;
    double p = 2.0;
    // growth: L4, l3 (drift), l4 (diffusion)
    double L4 = 1.0;
    double l3 = 1.0;
    double l4 = 1.0;

    std::optional<Dissipation> dissipation;
    // A sharper coercivity bound than L3(1+|x|^2+||mu||^2), when one is known.
    std::optional<CoercivityBound> sharp_coercivity;

    CoercivityBound coercivity() const { return {p, L3, L3, L3}; }
};

// f(|x|), f_bar(||mu||_2^2) and constants of the exponential-integrability
// condition; f and f_bar are power sums in their scalar argument.
struct LyapunovSpec {
    PowerSum f;
    PowerSum f_bar;
    double alpha = 1.0;
    double beta = 1.0;
    double kappa = 1.0;
};

using DriftFn = std::function<void(std::span<const double> x, const EmpiricalMeasure& mu, std::span<double> out)>;
// Writes the d x m1 diffusion matrix row-major.
using DiffusionFn = std::function<void(std::span<const double> x, const EmpiricalMeasure& mu, std::span<double> out)>;

struct CoefficientModel {
    std::string name;
    ModelDims dims;
    DriftFn drift;
    DiffusionFn diffusion;
    GrowthMeta growth;
    std::optional<LyapunovSpec> lyapunov;

    // Checks the metadata invariants (exponents, dissipation ordering).
    void validate() const;
};

enum class BuiltinModel { mean_square, double_kernel, example61, linear_mean_field };

struct LinearMeanFieldParams {
    double theta = 2.0;
    double kappa = 0.5;
    double sigma = 0.5;
};

// dX = (-18 X^5 - X^{1/3} (E X)^4 + 2) dt + (X^2 + E X) dW, real cube root.
CoefficientModel example61();
// dX = (-X - X (E X)^2) dt + (X + E X) dW.
CoefficientModel mean_square_model();
// dX = (-theta X + kappa E X) dt + sigma X dW.
CoefficientModel linear_mean_field(const LinearMeanFieldParams& params = {});

// b(x, mu) = \iint k(x, y, z) mu(dy) mu(dz),  sigma(x, mu) = \int s(x, y) mu(dy).
// The kernel's y/z derivatives must grow at most linearly; that is the
// caller's obligation and is not checked.
using DriftKernel = std::function<void(std::span<const double> x, std::span<const double> y,
                                       std::span<const double> z, std::span<double> out)>;
using DiffusionKernel =
    std::function<void(std::span<const double> x, std::span<const double> y, std::span<double> out)>;

CoefficientModel double_kernel_model(std::string name, ModelDims dims, DriftKernel drift_kernel,
                                     DiffusionKernel diffusion_kernel, GrowthMeta growth);
// The mean-square model written in kernel form: k = -x - x y z, s = x + y.
CoefficientModel default_double_kernel();

CoefficientModel make_builtin(BuiltinModel which, const LinearMeanFieldParams& linear = {});
BuiltinModel parse_builtin(const std::string& name);
std::string builtin_name(BuiltinModel which);

// Evaluation with finiteness checks; throws NonFiniteError naming the inputs.
std::vector<double> eval_drift(const CoefficientModel& model, std::span<const double> x, const EmpiricalMeasure& mu);
std::vector<double> eval_diffusion(const CoefficientModel& model, std::span<const double> x,
                                   const EmpiricalMeasure& mu);
double eval_drift(const CoefficientModel& model, double x, const EmpiricalMeasure& mu);
double eval_diffusion(const CoefficientModel& model, double x, const EmpiricalMeasure& mu);

} // namespace mvsde
