#include "mvsde/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mvsde {

namespace {

std::string describe_inputs(std::span<const double> x, const EmpiricalMeasure& mu) {
    std::ostringstream os;
    os.precision(17);
    os << "x = (";
    for (std::size_t k = 0; k < x.size(); ++k) os << (k ? ", " : "") << x[k];
    os << "), mu: N = " << mu.size() << ", mean = (";
    for (std::size_t k = 0; k < mu.mean().size(); ++k) os << (k ? ", " : "") << mu.mean()[k];
    os << "), second moment = " << mu.raw_moment(2.0);
    return os.str();
}

void check_finite(std::span<const double> values, const char* what, const CoefficientModel& model,
                  std::span<const double> x, const EmpiricalMeasure& mu) {
    for (double v : values) {
        if (!std::isfinite(v))
            throw NonFiniteError(model.name + ": " + what + " is not finite at " + describe_inputs(x, mu));
    }
}

void require_1d(std::span<const double> x, const char* model) {
    if (x.size() != 1) throw std::invalid_argument(std::string(model) + " is one-dimensional");
}

} // namespace

void CoefficientModel::validate() const {
    if (dims.state == 0 || dims.noise == 0) throw std::invalid_argument(name + ": dimensions must be >= 1");
    if (!drift || !diffusion) throw std::invalid_argument(name + ": drift and diffusion must be set");
    const auto& g = growth;
    if (g.gamma < 2.0) throw std::invalid_argument(name + ": gamma must be >= 2");
    if (g.q < 2.0) throw std::invalid_argument(name + ": q must be >= 2");
    if (g.p < 2.0) throw std::invalid_argument(name + ": p must be >= 2");
    for (double l : {g.l1, g.l2, g.l3, g.l4})
        if (l < 1.0) throw std::invalid_argument(name + ": exponents l1..l4 must be >= 1");
    for (double c : {g.L1, g.L2, g.L3, g.L4})
        if (!(c > 0.0)) throw std::invalid_argument(name + ": constants L1..L4 must be positive");
    if (g.dissipation) {
        const auto& d = *g.dissipation;
        if (!(d.L5 > d.L6 && d.L6 > 0.0)) throw std::invalid_argument(name + ": dissipation needs L5 > L6 > 0");
        if (d.p < 2.0) throw std::invalid_argument(name + ": dissipation exponent p must be >= 2");
    }
    if (lyapunov && !(lyapunov->alpha > 0.0 && lyapunov->beta > 0.0 && lyapunov->kappa > 0.0))
        throw std::invalid_argument(name + ": lyapunov constants alpha, beta, kappa must be positive");
}

CoefficientModel example61() {
    CoefficientModel m;
    m.name = "example61";
    m.dims = {1, 1};
    m.drift = [](std::span<const double> x, const EmpiricalMeasure& mu, std::span<double> out) {
        require_1d(x, "example61");
        const double v = x[0];
        const double v2 = v * v;
        const double mean = mu.mean_scalar();
        const double mean2 = mean * mean;
        out[0] = -18.0 * v2 * v2 * v - std::cbrt(v) * mean2 * mean2 + 2.0;
    };
    m.diffusion = [](std::span<const double> x, const EmpiricalMeasure& mu, std::span<double> out) {
        require_1d(x, "example61");
        out[0] = x[0] * x[0] + mu.mean_scalar();
    };
    auto& g = m.growth;
    g.local_lipschitz = PowerSum{{1.0, 2.0 / 3.0}, {2.0, 0.0}};
    g.L1 = 2.0;
    g.gamma = 6.0;
    g.q = 2.0;
    g.L2 = 50.0;
    g.l1 = 4.0;
    g.l2 = 1.0;
    g.L3 = 22.0;
    g.p = 12.0;
    g.L4 = 19.0;
    g.l3 = 5.0;
    g.l4 = 2.0;
    g.sharp_coercivity = CoercivityBound{2.0, 6.0, 0.0, 2.0};
    m.lyapunov = LyapunovSpec{PowerSum{{0.25, 2.0}, {1.0, 0.0}}, PowerSum{{1.0, 1.5}, {1.0, 2.0}}, 2.0, 1.0, 1.0};
    return m;
}

CoefficientModel mean_square_model() {
    CoefficientModel m;
    m.name = "mean-square";
    m.dims = {1, 1};
    m.drift = [](std::span<const double> x, const EmpiricalMeasure& mu, std::span<double> out) {
        require_1d(x, "mean-square");
        const double mean = mu.mean_scalar();
        out[0] = -x[0] - x[0] * mean * mean;
    };
    m.diffusion = [](std::span<const double> x, const EmpiricalMeasure& mu, std::span<double> out) {
        require_1d(x, "mean-square");
        out[0] = x[0] + mu.mean_scalar();
    };
    auto& g = m.growth;
    g.local_lipschitz = PowerSum{{2.0, 0.0}, {1.0, 2.0}};
    g.L1 = 0.5;
    g.gamma = 2.0;
    g.q = 2.0;
    g.L2 = 2.0;
    g.l1 = 2.0;
    g.l2 = 1.0;
    g.L3 = 14.0;
    g.p = 8.0;
    g.L4 = 2.0;
    g.l3 = 3.0;
    g.l4 = 1.0;
    g.sharp_coercivity = CoercivityBound{2.0, 0.0, 0.0, 2.0};
    return m;
}

CoefficientModel linear_mean_field(const LinearMeanFieldParams& params) {
    const double theta = params.theta;
    const double kappa = params.kappa;
    const double sig = params.sigma;
    if (!std::isfinite(theta) || !std::isfinite(kappa) || !std::isfinite(sig))
        throw std::invalid_argument("linear-mean-field parameters must be finite");

    CoefficientModel m;
    m.name = "linear-mean-field";
    m.dims = {1, 1};
    m.drift = [theta, kappa](std::span<const double> x, const EmpiricalMeasure& mu, std::span<double> out) {
        require_1d(x, "linear-mean-field");
        out[0] = -theta * x[0] + kappa * mu.mean_scalar();
    };
    m.diffusion = [sig](std::span<const double> x, const EmpiricalMeasure&, std::span<double> out) {
        require_1d(x, "linear-mean-field");
        out[0] = sig * x[0];
    };

    // 2<x,b> + (p-1) sig^2 x^2 <= (-2 theta + (p-1) sig^2 + |kappa|) x^2 + |kappa| m^2 by Young.
    const double ak = std::abs(kappa);
    const auto quad = [&](double p) { return -2.0 * theta + (p - 1.0) * sig * sig + ak; };
    constexpr double kFloor = 1e-3;
    auto& g = m.growth;
    g.gamma = 2.0;
    g.q = 2.0;
    g.local_lipschitz = PowerSum::constant(std::max({ak, quad(g.q), kFloor}));
    g.L1 = std::max(ak, kFloor);
    g.L2 = std::max({std::abs(theta), ak, std::abs(sig), kFloor});
    g.l1 = 1.0;
    g.l2 = 1.0;
    g.p = 4.0;
    g.L3 = std::max({ak, quad(g.p), kFloor});
    g.L4 = g.L2;
    g.l3 = 1.0;
    g.l4 = 1.0;
    const double L5 = -quad(2.0);
    if (L5 > ak && ak > 0.0) g.dissipation = Dissipation{L5, ak, 2.0};
    return m;
}

CoefficientModel double_kernel_model(std::string name, ModelDims dims, DriftKernel drift_kernel,
                                     DiffusionKernel diffusion_kernel, GrowthMeta growth) {
    if (!drift_kernel || !diffusion_kernel) throw std::invalid_argument("double_kernel_model: kernels must be set");
    CoefficientModel m;
    m.name = std::move(name);
    m.dims = dims;
    const std::size_t d = dims.state;
    const std::size_t cols = dims.state * dims.noise;
    m.drift = [drift_kernel, d](std::span<const double> x, const EmpiricalMeasure& mu, std::span<double> out) {
        std::vector<double> buf(d);
        for (std::size_t c = 0; c < d; ++c) {
            out[c] = mu.double_kernel_integral([&](std::span<const double> y, std::span<const double> z) {
                drift_kernel(x, y, z, buf);
                return buf[c];
            });
        }
    };
    m.diffusion = [diffusion_kernel, cols](std::span<const double> x, const EmpiricalMeasure& mu,
                                           std::span<double> out) {
        std::vector<double> buf(cols);
        for (std::size_t c = 0; c < cols; ++c) {
            out[c] = mu.kernel_integral([&](std::span<const double> y) {
                diffusion_kernel(x, y, buf);
                return buf[c];
            });
        }
    };
    m.growth = std::move(growth);
    return m;
}

CoefficientModel default_double_kernel() {
    auto reference = mean_square_model();
    return double_kernel_model(
        "double-kernel", {1, 1},
        [](std::span<const double> x, std::span<const double> y, std::span<const double> z, std::span<double> out) {
            out[0] = -x[0] - x[0] * y[0] * z[0];
        },
        [](std::span<const double> x, std::span<const double> y, std::span<double> out) { out[0] = x[0] + y[0]; },
        reference.growth);
}

CoefficientModel make_builtin(BuiltinModel which, const LinearMeanFieldParams& linear) {
    switch (which) {
    case BuiltinModel::mean_square:
        return mean_square_model();
    case BuiltinModel::double_kernel:
        return default_double_kernel();
    case BuiltinModel::example61:
        return example61();
    case BuiltinModel::linear_mean_field:
        return linear_mean_field(linear);
    }
    throw std::invalid_argument("unknown builtin model");
}

BuiltinModel parse_builtin(const std::string& name) {
    if (name == "example61") return BuiltinModel::example61;
    if (name == "mean-square") return BuiltinModel::mean_square;
    if (name == "double-kernel") return BuiltinModel::double_kernel;
    if (name == "linear-mean-field") return BuiltinModel::linear_mean_field;
    throw std::invalid_argument("unknown model '" + name +
                                "' (expected example61, mean-square, double-kernel or linear-mean-field)");
}

std::string builtin_name(BuiltinModel which) {
    switch (which) {
    case BuiltinModel::mean_square:
        return "mean-square";
    case BuiltinModel::double_kernel:
        return "double-kernel";
    case BuiltinModel::example61:
        return "example61";
    case BuiltinModel::linear_mean_field:
        return "linear-mean-field";
    }
    return "unknown";
}

std::vector<double> eval_drift(const CoefficientModel& model, std::span<const double> x, const EmpiricalMeasure& mu) {
    if (x.size() != model.dims.state) throw std::invalid_argument(model.name + ": state dimension mismatch");
    check_finite(x, "drift input", model, x, mu);
    std::vector<double> out(model.dims.state);
    model.drift(x, mu, out);
    check_finite(out, "drift", model, x, mu);
    return out;
}

std::vector<double> eval_diffusion(const CoefficientModel& model, std::span<const double> x,
                                   const EmpiricalMeasure& mu) {
    if (x.size() != model.dims.state) throw std::invalid_argument(model.name + ": state dimension mismatch");
    check_finite(x, "diffusion input", model, x, mu);
    std::vector<double> out(model.dims.state * model.dims.noise);
    model.diffusion(x, mu, out);
    check_finite(out, "diffusion", model, x, mu);
    return out;
}

double eval_drift(const CoefficientModel& model, double x, const EmpiricalMeasure& mu) {
    return eval_drift(model, std::span<const double>(&x, 1), mu)[0];
}

double eval_diffusion(const CoefficientModel& model, double x, const EmpiricalMeasure& mu) {
    return eval_diffusion(model, std::span<const double>(&x, 1), mu)[0];
}

} // namespace mvsde
