#include "mvsde/verify.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "mvsde/chaos.hpp"
#include "mvsde/rng.hpp"

namespace mvsde {

std::string verdict_name(Verdict v) {
    switch (v) {
    case Verdict::pass:
        return "pass";
    case Verdict::fail:
        return "fail";
    case Verdict::inconclusive:
        return "inconclusive";
    }
    return "unknown";
}

std::string inequality_name(Inequality kind) {
    switch (kind) {
    case Inequality::monotonicity:
        return "monotonicity";
    case Inequality::drift_lipschitz:
        return "drift-lipschitz";
    case Inequality::diffusion_state_lipschitz:
        return "diffusion-state-lipschitz";
    case Inequality::diffusion_measure_lipschitz:
        return "diffusion-measure-lipschitz";
    case Inequality::coercivity:
        return "coercivity";
    case Inequality::drift_growth:
        return "drift-growth";
    case Inequality::diffusion_growth:
        return "diffusion-growth";
    case Inequality::lyapunov:
        return "lyapunov";
    }
    return "unknown";
}

bool Evaluation::violated() const {
    const double tol = kRelativeTolerance * std::max({std::abs(lhs), std::abs(rhs), scale});
    return lhs > rhs + tol;
}

namespace {

double norm(std::span<const double> v) {
    double s = 0.0;
    for (double c : v) s += c * c;
    return std::sqrt(s);
}

double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

double w2(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    if (mu.dim() == 1) return wasserstein_1d(2.0, mu, nu);
    const auto a = mu.samples();
    const auto b = nu.samples();
    if (a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin())) return 0.0;
    throw std::invalid_argument("W2 between distinct measures is only exact in one dimension");
}

// |x|^e for e >= 0 with 0^0 = 1.
double pow_abs(double r, double e) { return e == 0.0 ? 1.0 : std::pow(r, e); }

struct Inputs {
    EmpiricalMeasure mu;
    std::optional<EmpiricalMeasure> nu;
};

Inputs measures_of(const SampleInput& in, bool need_nu) {
    Inputs m{EmpiricalMeasure(in.mu, in.dim), std::nullopt};
    if (need_nu) m.nu.emplace(in.nu, in.dim);
    return m;
}

Evaluation eval_monotonicity(const CoefficientModel& model, const SampleInput& in) {
    const auto& g = model.growth;
    const auto ms = measures_of(in, true);
    const auto& mu = ms.mu;
    const auto& nu = *ms.nu;
    const auto b = eval_drift(model, in.x, mu);
    const auto bb = eval_drift(model, in.x_bar, nu);
    const auto s = eval_diffusion(model, in.x, mu);
    const auto sb = eval_diffusion(model, in.x_bar, nu);
    double inner = 0.0, sdiff = 0.0;
    for (std::size_t k = 0; k < in.dim; ++k) inner += (in.x[k] - in.x_bar[k]) * (b[k] - bb[k]);
    for (std::size_t k = 0; k < s.size(); ++k) sdiff += (s[k] - sb[k]) * (s[k] - sb[k]);
    const double dx = distance(in.x, in.x_bar);
    const double w = w2(mu, nu);
    const double radius = std::max(norm(in.x), norm(in.x_bar));
    const double factor = g.local_lipschitz(radius) + g.L1 * mu.raw_moment(g.gamma) + g.L1 * nu.raw_moment(g.gamma);
    Evaluation e;
    e.lhs = 2.0 * inner + (g.q - 1.0) * sdiff;
    e.rhs = factor * (dx * dx + w * w);
    const double sn = norm(s) + norm(sb);
    e.scale = 2.0 * dx * (norm(b) + norm(bb)) + (g.q - 1.0) * sn * sn;
    return e;
}

Evaluation eval_drift_lipschitz(const CoefficientModel& model, const SampleInput& in) {
    const auto& g = model.growth;
    const auto ms = measures_of(in, true);
    const auto b = eval_drift(model, in.x, ms.mu);
    const auto bb = eval_drift(model, in.x_bar, *ms.nu);
    const double factor = 1.0 + pow_abs(norm(in.x), g.l1) + pow_abs(norm(in.x_bar), g.l1) +
                          ms.mu.raw_moment(g.l1) + ms.nu->raw_moment(g.l1);
    Evaluation e;
    e.lhs = distance(b, bb);
    e.rhs = g.L2 * factor * (distance(in.x, in.x_bar) + w2(ms.mu, *ms.nu));
    e.scale = norm(b) + norm(bb);
    return e;
}

Evaluation eval_diffusion_state(const CoefficientModel& model, const SampleInput& in) {
    const auto& g = model.growth;
    const EmpiricalMeasure mu(in.mu, in.dim);
    const auto s = eval_diffusion(model, in.x, mu);
    const auto sb = eval_diffusion(model, in.x_bar, mu);
    const double factor = 1.0 + pow_abs(norm(in.x), g.l2) + pow_abs(norm(in.x_bar), g.l2);
    Evaluation e;
    e.lhs = distance(s, sb);
    e.rhs = g.L2 * factor * distance(in.x, in.x_bar);
    e.scale = norm(s) + norm(sb);
    return e;
}

Evaluation eval_diffusion_measure(const CoefficientModel& model, const SampleInput& in) {
    const auto ms = measures_of(in, true);
    const auto s = eval_diffusion(model, in.x, ms.mu);
    const auto sb = eval_diffusion(model, in.x, *ms.nu);
    Evaluation e;
    e.lhs = distance(s, sb);
    e.rhs = model.growth.L2 * w2(ms.mu, *ms.nu);
    e.scale = norm(s) + norm(sb);
    return e;
}

Evaluation eval_coercivity(const CoefficientModel& model, const CoercivityBound& bound, const SampleInput& in) {
    const EmpiricalMeasure mu(in.mu, in.dim);
    const auto b = eval_drift(model, in.x, mu);
    const auto s = eval_diffusion(model, in.x, mu);
    const double x2 = dot(in.x, in.x);
    const double s2 = dot(s, s);
    const double m2 = mu.raw_moment(2.0);
    Evaluation e;
    e.lhs = 2.0 * dot(in.x, b) + (bound.p - 1.0) * s2;
    e.rhs = bound.constant + bound.x_coeff * x2 + bound.measure_coeff * m2;
    e.scale = 2.0 * std::sqrt(x2) * norm(b) + (bound.p - 1.0) * s2 + std::abs(bound.constant) +
              std::abs(bound.x_coeff) * x2 + std::abs(bound.measure_coeff) * m2;
    return e;
}

Evaluation eval_drift_growth(const CoefficientModel& model, const SampleInput& in) {
    const auto& g = model.growth;
    const EmpiricalMeasure mu(in.mu, in.dim);
    const auto b = eval_drift(model, in.x, mu);
    Evaluation e;
    e.lhs = norm(b);
    e.rhs = g.L4 * (1.0 + pow_abs(norm(in.x), g.l3) + mu.raw_moment(g.l3));
    e.scale = e.lhs;
    return e;
}

Evaluation eval_diffusion_growth(const CoefficientModel& model, const SampleInput& in) {
    const auto& g = model.growth;
    const EmpiricalMeasure mu(in.mu, in.dim);
    const auto s = eval_diffusion(model, in.x, mu);
    Evaluation e;
    e.lhs = norm(s);
    e.rhs = g.L4 * (1.0 + pow_abs(norm(in.x), g.l4) + mu.moment_norm(2.0));
    e.scale = e.lhs;
    return e;
}

// <grad f, b> + 1/2 |grad f^T sigma|^2 + 1/2 tr(sigma^T Hess f sigma) for
// radial f(|x|):  grad f = f'(r) x/r,  Hess f = f''(r) u u^T + (f'(r)/r)(I - u u^T).
Evaluation eval_lyapunov(const CoefficientModel& model, const SampleInput& in) {
    if (!model.lyapunov) throw std::invalid_argument(model.name + ": no Lyapunov spec");
    const auto& ly = *model.lyapunov;
    const std::size_t d = model.dims.state;
    const std::size_t m1 = model.dims.noise;
    const EmpiricalMeasure mu(in.mu, in.dim);
    const auto b = eval_drift(model, in.x, mu);
    const auto s = eval_diffusion(model, in.x, mu);
    const double r = norm(in.x);
    const double f1 = ly.f.derivative(r);
    const double f2 = ly.f.second_derivative(r);
    const double f1_over_r = ly.f.derivative_over_r(r);
    if (r == 0.0 && !std::isfinite(f1_over_r))
        throw std::invalid_argument("f(|x|) is not twice differentiable at x = 0");

    std::vector<double> u(d, 0.0);
    if (r > 0.0)
        for (std::size_t k = 0; k < d; ++k) u[k] = in.x[k] / r;
    std::vector<double> grad(d);
    for (std::size_t k = 0; k < d; ++k) grad[k] = f1 * u[k];

    // grad^T sigma, length m1
    double gs2 = 0.0;
    for (std::size_t j = 0; j < m1; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < d; ++k) acc += grad[k] * s[k * m1 + j];
        gs2 += acc * acc;
    }
    // tr(sigma^T H sigma) = sum_j col_j^T H col_j.
    // At r = 0, H = f''(0) I = (f'(r)/r)(0) I; u = 0 handles that below.
    const double radial = r > 0.0 ? f2 : f1_over_r;
    double trace = 0.0;
    for (std::size_t j = 0; j < m1; ++j) {
        double cc = 0.0, uc = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double c = s[k * m1 + j];
            cc += c * c;
            uc += u[k] * c;
        }
        trace += radial * uc * uc + f1_over_r * (cc - uc * uc);
    }
    const double m2 = mu.raw_moment(2.0);
    Evaluation e;
    e.lhs = dot(grad, b) + 0.5 * gs2 + 0.5 * trace;
    e.rhs = ly.alpha * ly.f(r) + ly.beta * ly.f_bar(m2);
    e.scale = std::abs(dot(grad, b)) + 0.5 * gs2 + 0.5 * std::abs(trace) + std::abs(e.rhs);
    return e;
}

// ---- sampling -------------------------------------------------------------

using Gen = std::mt19937_64;

double uniform(Gen& g, double a, double b) { return std::uniform_real_distribution<double>(a, b)(g); }
double gauss(Gen& g) { return std::normal_distribution<double>(0.0, 1.0)(g); }
double log_uniform(Gen& g, double a, double b) { return std::exp(uniform(g, std::log(a), std::log(b))); }
bool chance(Gen& g, double p) { return uniform(g, 0.0, 1.0) < p; }

std::vector<double> direction(Gen& g, std::size_t dim) {
    std::vector<double> v(dim);
    if (dim == 1) {
        v[0] = chance(g, 0.5) ? 1.0 : -1.0;
        return v;
    }
    double n = 0.0;
    while (n == 0.0) {
        for (auto& c : v) c = gauss(g);
        n = norm(v);
    }
    for (auto& c : v) c /= n;
    return v;
}

std::vector<double> scaled(std::vector<double> v, double r) {
    for (auto& c : v) c *= r;
    return v;
}

// Point in the ball of radius `radius`, biased toward 0, tiny |x| and |x| = radius.
std::vector<double> sample_point(Gen& g, std::size_t dim, double radius) {
    const double u = uniform(g, 0.0, 1.0);
    double r;
    if (u < 0.08) r = 0.0;
    else if (u < 0.2) r = std::min(radius, log_uniform(g, 1e-9, 1e-2));
    else if (u < 0.3) r = radius;
    else if (u < 0.65) r = std::min(radius, std::abs(gauss(g)) * log_uniform(g, 0.1, 3.0));
    else r = radius * std::pow(uniform(g, 0.0, 1.0), 1.0 / static_cast<double>(dim));
    return scaled(direction(g, dim), r);
}

std::vector<double> sample_partner(Gen& g, const std::vector<double>& x, double radius) {
    const double u = uniform(g, 0.0, 1.0);
    if (u < 0.15) return x;
    if (u < 0.4) {
        const double base = std::max(norm(x), 1e-3);
        auto y = x;
        const auto dir = direction(g, x.size());
        const double step = base * log_uniform(g, 1e-6, 1.0);
        for (std::size_t k = 0; k < y.size(); ++k) y[k] += step * dir[k];
        const double n = norm(y);
        if (n > radius) y = scaled(std::move(y), radius / n);
        return y;
    }
    return sample_point(g, x.size(), radius);
}

// 1-16 atoms from a mixture of up to three Gaussians, some pinned at 0.
std::vector<double> sample_atoms(Gen& g, std::size_t dim) {
    const int k = std::uniform_int_distribution<int>(1, 16)(g);
    const int comps = std::uniform_int_distribution<int>(1, 3)(g);
    const double scale = log_uniform(g, 1e-3, 3.0);
    std::vector<std::vector<double>> centers(comps, std::vector<double>(dim));
    std::vector<double> spreads(comps);
    for (int c = 0; c < comps; ++c) {
        for (auto& v : centers[c]) v = scale * gauss(g);
        spreads[c] = scale * uniform(g, 0.05, 1.0);
    }
    const double zero_rate = chance(g, 0.2) ? 0.3 : 0.0;
    std::vector<double> atoms(static_cast<std::size_t>(k) * dim, 0.0);
    for (int j = 0; j < k; ++j) {
        if (chance(g, zero_rate)) continue;
        const int c = std::uniform_int_distribution<int>(0, comps - 1)(g);
        for (std::size_t a = 0; a < dim; ++a) atoms[j * dim + a] = centers[c][a] + spreads[c] * gauss(g);
    }
    return atoms;
}

struct MeasureSampling {
    bool distinct_allowed = true; // false forces nu = mu
    bool origin_only = false;     // mu = nu = delta_0
};

void sample_measures(Gen& g, SampleInput& in, const MeasureSampling& how) {
    if (how.origin_only) {
        in.mu.assign(in.dim, 0.0);
        in.nu = in.mu;
        return;
    }
    const double u = uniform(g, 0.0, 1.0);
    if (u < 0.08) {
        in.mu.assign(in.dim * static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 4)(g)), 0.0);
    } else {
        in.mu = sample_atoms(g, in.dim);
    }
    if (!how.distinct_allowed || u < 0.2) {
        in.nu = in.mu;
    } else if (u < 0.45) {
        in.nu = in.mu;
        const double eps = log_uniform(g, 1e-6, 1.0);
        for (auto& v : in.nu) v += eps * gauss(g);
    } else {
        in.nu = sample_atoms(g, in.dim);
    }
}

struct SamplerSpec {
    double radius = 20.0;
    bool pair = false; // needs x_bar
    MeasureSampling measures;
};

SampleInput draw(std::uint64_t seed, std::uint64_t index, std::size_t dim, const SamplerSpec& spec) {
    Gen g(derive_seed(seed, index));
    SampleInput in;
    in.dim = dim;
    in.x = sample_point(g, dim, spec.radius);
    in.x_bar = spec.pair ? sample_partner(g, in.x, spec.radius) : in.x;
    sample_measures(g, in, spec.measures);
    return in;
}

// Per-target accumulator, merged deterministically after the parallel loop.
struct Tally {
    std::size_t count = 0;
    std::vector<Violation> first;
    double max_ratio = 0.0; // max lhs / rhs-factor, when meaningful
};

struct SweepTarget {
    CheckTarget target;
    // Constant that rhs is linear in; max lhs * declared / rhs estimates the
    // smallest admissible value. Zero disables the estimate.
    double declared_constant = 0.0;
};

struct SweepResult {
    std::vector<Tally> tallies;
    std::size_t skipped = 0;
    std::vector<std::string> errors;
};

SweepResult sweep(const CoefficientModel& model, const std::vector<SweepTarget>& targets, std::size_t n,
                  const SamplerSpec& spec, const CheckOptions& options) {
    const std::size_t dim = model.dims.state;
    const std::size_t nt = targets.size();
    SweepResult result;
    result.tallies.resize(nt);
    std::exception_ptr error;
    const auto total = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel
    {
        std::vector<Tally> local(nt);
        std::size_t local_skipped = 0;
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < total; ++i) {
            try {
                const auto idx = static_cast<std::uint64_t>(i);
                const SampleInput in = draw(options.seed, idx, dim, spec);
                for (std::size_t t = 0; t < nt; ++t) {
                    Evaluation e;
                    try {
                        e = evaluate(model, targets[t].target, in);
                    } catch (const std::invalid_argument&) {
                        ++local_skipped;
                        continue;
                    }
                    auto& tl = local[t];
                    if (targets[t].declared_constant > 0.0 && e.rhs > 0.0)
                        tl.max_ratio = std::max(tl.max_ratio, e.lhs / e.rhs * targets[t].declared_constant);
                    if (e.violated()) {
                        ++tl.count;
                        if (tl.first.size() < options.max_recorded)
                            tl.first.push_back({idx, targets[t].target, in, e.lhs, e.rhs, e.margin()});
                    }
                }
            } catch (...) {
#pragma omp critical(mvsde_verify_error)
                if (!error) error = std::current_exception();
            }
        }
#pragma omp critical(mvsde_verify_merge)
        {
            result.skipped += local_skipped;
            for (std::size_t t = 0; t < nt; ++t) {
                auto& dst = result.tallies[t];
                dst.count += local[t].count;
                dst.max_ratio = std::max(dst.max_ratio, local[t].max_ratio);
                dst.first.insert(dst.first.end(), local[t].first.begin(), local[t].first.end());
            }
        }
    }
    if (error) std::rethrow_exception(error);
    for (auto& t : result.tallies) {
        std::sort(t.first.begin(), t.first.end(),
                  [](const Violation& a, const Violation& b) { return a.sample < b.sample; });
        if (t.first.size() > options.max_recorded) t.first.resize(options.max_recorded);
    }
    return result;
}

AssumptionReport make_report(std::string id, std::size_t n, const std::vector<Tally>& tallies,
                             std::size_t max_recorded) {
    AssumptionReport r;
    r.id = std::move(id);
    r.samples = n;
    for (const auto& t : tallies) {
        r.violation_count += t.count;
        r.violations.insert(r.violations.end(), t.first.begin(), t.first.end());
    }
    std::sort(r.violations.begin(), r.violations.end(),
              [](const Violation& a, const Violation& b) { return a.sample < b.sample; });
    if (r.violations.size() > max_recorded) r.violations.resize(max_recorded);
    r.verdict = r.violation_count > 0 ? Verdict::fail : Verdict::pass;
    return r;
}

bool measure_distinct_exact(const CoefficientModel& model) { return model.dims.state == 1; }

} // namespace

Evaluation evaluate(const CoefficientModel& model, const CheckTarget& target, const SampleInput& in) {
    if (in.x.size() != in.dim || in.dim != model.dims.state)
        throw std::invalid_argument("sample dimension does not match the model");
    switch (target.kind) {
    case Inequality::monotonicity:
        return eval_monotonicity(model, in);
    case Inequality::drift_lipschitz:
        return eval_drift_lipschitz(model, in);
    case Inequality::diffusion_state_lipschitz:
        return eval_diffusion_state(model, in);
    case Inequality::diffusion_measure_lipschitz:
        return eval_diffusion_measure(model, in);
    case Inequality::coercivity:
        return eval_coercivity(model, target.bound, in);
    case Inequality::drift_growth:
        return eval_drift_growth(model, in);
    case Inequality::diffusion_growth:
        return eval_diffusion_growth(model, in);
    case Inequality::lyapunov:
        return eval_lyapunov(model, in);
    }
    throw std::invalid_argument("unknown inequality");
}

Evaluation replay(const CoefficientModel& model, const Violation& violation) {
    return evaluate(model, violation.target, violation.input);
}

AssumptionReport check_local_monotonicity(const CoefficientModel& model, double R, std::size_t n_samples,
                                          const CheckOptions& options) {
    if (!(R > 0.0)) throw std::invalid_argument("check_local_monotonicity: R must be positive");
    SamplerSpec spec{R, true, {measure_distinct_exact(model), false}};
    const auto res = sweep(model, {{{Inequality::monotonicity, {}}, 0.0}}, n_samples, spec, options);
    std::ostringstream id;
    id << "monotonicity(R=" << R << ")";
    auto r = make_report(id.str(), n_samples, res.tallies, options.max_recorded);
    r.estimated_constants["R"] = R;
    if (!measure_distinct_exact(model)) {
        r.notes.push_back("dimension > 1: only mu = nu was sampled, W2 terms untested");
        if (r.verdict == Verdict::pass) r.verdict = Verdict::inconclusive;
    }
    return r;
}

AssumptionReport check_coercivity_bound(const CoefficientModel& model, const CoercivityBound& bound,
                                        std::size_t n_samples, const CheckOptions& options, std::string id) {
    SamplerSpec spec{options.x_max, false, {true, false}};
    // Only the L3(1 + |x|^2 + ||mu||^2) shape has a single constant to estimate.
    const bool single = bound.constant > 0.0 && bound.constant == bound.x_coeff && bound.x_coeff == bound.measure_coeff;
    const double declared = single ? bound.constant : 0.0;
    const auto res = sweep(model, {{{Inequality::coercivity, bound}, declared}}, n_samples, spec, options);
    auto r = make_report(std::move(id), n_samples, res.tallies, options.max_recorded);
    r.estimated_constants["p"] = bound.p;
    return r;
}

AssumptionReport check_coercivity(const CoefficientModel& model, std::size_t n_samples, CoercivityMode mode,
                                  const CheckOptions& options) {
    switch (mode) {
    case CoercivityMode::declared: {
        auto r = check_coercivity_bound(model, model.growth.coercivity(), n_samples, options, "coercivity");
        r.estimated_constants["L3"] = model.growth.L3;
        return r;
    }
    case CoercivityMode::sharp: {
        if (!model.growth.sharp_coercivity) {
            AssumptionReport r;
            r.id = "coercivity-sharp";
            r.verdict = Verdict::inconclusive;
            r.notes.push_back("model declares no sharp coercivity bound");
            return r;
        }
        return check_coercivity_bound(model, *model.growth.sharp_coercivity, n_samples, options,
                                      "coercivity-sharp");
    }
    case CoercivityMode::dissipative: {
        if (model.growth.dissipation) {
            const auto& d = *model.growth.dissipation;
            auto r = check_coercivity_bound(model, d.as_bound(), n_samples, options, "dissipativity");
            r.estimated_constants["L5"] = d.L5;
            r.estimated_constants["L6"] = d.L6;
            return r;
        }
        SamplerSpec spec{options.x_max, false, {false, true}};
        const CoercivityBound probe{2.0, 0.0, 0.0, 0.0};
        const auto res = sweep(model, {{{Inequality::coercivity, probe}, 0.0}}, n_samples, spec, options);
        auto r = make_report("dissipativity-probe", n_samples, res.tallies, options.max_recorded);
        r.notes.push_back("no L5, L6 declared; probed 2<x,b(x,delta_0)> + |sigma(x,delta_0)|^2 <= 0, "
                          "which every L5 > 0 requires");
        return r;
    }
    }
    throw std::invalid_argument("unknown coercivity mode");
}

std::optional<double> largest_feasible_p(const CoefficientModel& model, std::size_t n_samples,
                                         const CheckOptions& options, double p_max, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("largest_feasible_p: step must be positive");
    std::optional<double> best;
    for (int k = 0;; ++k) {
        const double p = 2.0 + step * k;
        if (p > p_max + 1e-12) break;
        auto bound = model.growth.coercivity();
        bound.p = p;
        const auto r = check_coercivity_bound(model, bound, n_samples, options);
        if (r.verdict == Verdict::fail) break;
        best = p;
    }
    return best;
}

AssumptionReport check_polynomial_lipschitz(const CoefficientModel& model, std::size_t n_samples,
                                            const CheckOptions& options) {
    SamplerSpec spec{options.x_max, true, {measure_distinct_exact(model), false}};
    const double L2 = model.growth.L2;
    const std::vector<SweepTarget> targets{{{Inequality::drift_lipschitz, {}}, L2},
                                           {{Inequality::diffusion_state_lipschitz, {}}, L2},
                                           {{Inequality::diffusion_measure_lipschitz, {}}, L2}};
    const auto res = sweep(model, targets, n_samples, spec, options);
    auto r = make_report("polynomial-lipschitz", n_samples, res.tallies, options.max_recorded);
    const char* names[] = {"drift", "diffusion-state", "diffusion-measure"};
    for (std::size_t t = 0; t < targets.size(); ++t) {
        r.estimated_constants[std::string("min_L2_") + names[t]] = res.tallies[t].max_ratio;
        r.estimated_constants[std::string("violations_") + names[t]] = static_cast<double>(res.tallies[t].count);
    }
    r.estimated_constants["L2"] = L2;
    if (!measure_distinct_exact(model)) {
        r.notes.push_back("dimension > 1: only mu = nu was sampled, W2 terms untested");
        if (r.verdict == Verdict::pass) r.verdict = Verdict::inconclusive;
    }
    return r;
}

AssumptionReport check_growth(const CoefficientModel& model, std::size_t n_samples, const CheckOptions& options) {
    SamplerSpec spec{options.x_max, false, {true, false}};
    const double L4 = model.growth.L4;
    const std::vector<SweepTarget> targets{{{Inequality::drift_growth, {}}, L4},
                                           {{Inequality::diffusion_growth, {}}, L4}};
    const auto res = sweep(model, targets, n_samples, spec, options);
    auto r = make_report("growth", n_samples, res.tallies, options.max_recorded);
    r.estimated_constants["min_L4_drift"] = res.tallies[0].max_ratio;
    r.estimated_constants["min_L4_diffusion"] = res.tallies[1].max_ratio;
    r.estimated_constants["L4"] = L4;
    return r;
}

bool divergence_condition_holds(const PowerSum& f, const PowerSum& L, double kappa) {
    // Walk the merged exponent list from the top; the first nonzero net
    // coefficient decides, unless it sits at exponent 0 (bounded difference).
    std::map<double, double, std::greater<>> net;
    for (const auto& t : f.terms()) net[t.exponent] += t.coefficient;
    for (const auto& t : L.terms()) net[t.exponent] -= kappa * t.coefficient;
    for (const auto& [e, c] : net) {
        if (c == 0.0) continue;
        return e > 0.0 && c > 0.0;
    }
    return false;
}

AssumptionReport lyapunov_check(const CoefficientModel& model, std::size_t n_samples, const CheckOptions& options) {
    if (!model.lyapunov) {
        AssumptionReport r;
        r.id = "lyapunov";
        r.verdict = Verdict::inconclusive;
        r.notes.push_back("model declares no Lyapunov function");
        return r;
    }
    const auto& ly = *model.lyapunov;
    SamplerSpec spec{options.x_max, false, {true, false}};
    const auto res = sweep(model, {{{Inequality::lyapunov, {}}, 0.0}}, n_samples, spec, options);
    auto r = make_report("lyapunov", n_samples, res.tallies, options.max_recorded);
    if (res.skipped > 0) r.notes.push_back(std::to_string(res.skipped) + " sample(s) skipped at x = 0");

    // f and f_bar map [0, inf) to [0, inf) and are non-decreasing.
    bool shape_ok = true;
    for (int k = 0; k <= 400 && shape_ok; ++k) {
        const double t = 1e-3 * std::pow(1.05, k) - 1e-3;
        for (const auto* g : {&ly.f, &ly.f_bar})
            if ((*g)(t) < 0.0 || g->derivative(t) < -kRelativeTolerance) shape_ok = false;
    }
    if (!shape_ok) {
        r.notes.push_back("f or f_bar is negative or decreasing somewhere on [0, inf)");
        r.verdict = Verdict::fail;
    }
    const bool divergence = divergence_condition_holds(ly.f, model.growth.local_lipschitz, ly.kappa);
    r.estimated_constants["deg_f"] = ly.f.degree();
    r.estimated_constants["deg_L"] = model.growth.local_lipschitz.degree();
    r.estimated_constants["divergence_condition"] = divergence ? 1.0 : 0.0;
    if (!divergence) {
        r.notes.push_back("f(R) - kappa L(R) does not diverge: f = " + ly.f.to_string() +
                          ", L = " + model.growth.local_lipschitz.to_string());
        r.verdict = Verdict::fail;
    }
    return r;
}

AssumptionReport check_exponent_relations(const GrowthMeta& g) {
    AssumptionReport r;
    r.id = "exponents";
    const double p_needed = std::max({g.gamma, 2.0 + 2.0 * g.l3, 4.0 * g.l4});
    const double q_max = std::min(g.p / 2.0 + 1.0 - g.l3, g.p / 2.0 + 2.0 - 2.0 * g.l4);
    r.estimated_constants["p"] = g.p;
    r.estimated_constants["p_required"] = p_needed;
    r.estimated_constants["q"] = g.q;
    r.estimated_constants["q_max"] = q_max;
    if (g.p < p_needed) r.notes.push_back("p < max{gamma, 2 + 2 l3, 4 l4}");
    if (g.q < 2.0 || g.q > q_max) r.notes.push_back("q outside [2, (p/2 + 1 - l3) ^ (p/2 + 2 - 2 l4)]");
    r.violation_count = r.notes.size();
    r.verdict = r.notes.empty() ? Verdict::pass : Verdict::fail;
    return r;
}

double phi(double x, double y) {
    const double x2 = x * x, y2 = y * y;
    return -36.0 * (x2 * x2 + x2 * x * y + x2 * y2 + x * y2 * y + y2 * y2) + 4.0 * x2 + 4.0 * y2;
}

double phi_grid_max(std::size_t n) {
    if (n < 2) throw std::invalid_argument("phi_grid_max: need at least two points per axis");
    const double h = 4.0 / static_cast<double>(n - 1);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) best = std::max(best, phi(-2.0 + h * i, -2.0 + h * j));
    return best;
}

double phi_extremum(std::size_t n) {
    if (n < 2) throw std::invalid_argument("phi_extremum: need at least two points per axis");
    const double h = 4.0 / static_cast<double>(n - 1);
    double best = -std::numeric_limits<double>::infinity();
    double bx = 0.0, by = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double x = -2.0 + h * i, y = -2.0 + h * j;
            const double v = phi(x, y);
            if (v > best) {
                best = v;
                bx = x;
                by = y;
            }
        }
    }
    // Newton on the gradient; keep iterates only while they improve phi.
    for (int it = 0; it < 50; ++it) {
        const double gx = -36.0 * (4 * bx * bx * bx + 3 * bx * bx * by + 2 * bx * by * by + by * by * by) + 8 * bx;
        const double gy = -36.0 * (bx * bx * bx + 2 * bx * bx * by + 3 * bx * by * by + 4 * by * by * by) + 8 * by;
        const double hxx = -36.0 * (12 * bx * bx + 6 * bx * by + 2 * by * by) + 8;
        const double hxy = -36.0 * (3 * bx * bx + 4 * bx * by + 3 * by * by);
        const double hyy = -36.0 * (2 * bx * bx + 6 * bx * by + 12 * by * by) + 8;
        const double det = hxx * hyy - hxy * hxy;
        if (det == 0.0) break;
        const double nx = bx - (hyy * gx - hxy * gy) / det;
        const double ny = by - (hxx * gy - hxy * gx) / det;
        const double v = phi(nx, ny);
        if (!(v >= best)) break;
        const bool converged = std::abs(nx - bx) + std::abs(ny - by) < 1e-15;
        best = v;
        bx = nx;
        by = ny;
        if (converged) break;
    }
    return best;
}

IntegrabilitySeries monitor_exponential_integrability(const Trajectory& trajectory, const PowerSum& f, double alpha,
                                                      double ceiling_factor) {
    if (trajectory.snapshots.empty()) throw std::invalid_argument("monitor: empty trajectory");
    IntegrabilitySeries out;
    std::vector<double> logs;
    for (const auto& snap : trajectory.snapshots) {
        const std::size_t n = snap.size();
        const double w = std::exp(-alpha * snap.time);
        logs.resize(n);
        double shift = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            logs[i] = w * f(norm(snap.state(i)));
            shift = std::max(shift, logs[i]);
        }
        double sum = 0.0, sum2 = 0.0;
        for (double l : logs) {
            const double v = std::exp(l - shift);
            sum += v;
            sum2 += v * v;
        }
        const double nn = static_cast<double>(n);
        const double mean = sum / nn;
        const double var = n > 1 ? std::max(0.0, (sum2 - nn * mean * mean) / (nn - 1.0)) : 0.0;
        out.times.push_back(snap.time);
        out.log_values.push_back(shift + std::log(mean));
        out.values.push_back(std::exp(out.log_values.back()));
        out.std_errors.push_back(std::exp(shift) * std::sqrt(var / nn));
    }
    out.ceiling = ceiling_factor * out.values.front();
    const double log_ceiling = std::log(ceiling_factor) + out.log_values.front();
    for (double l : out.log_values)
        if (l > log_ceiling) out.exceeded = true;
    return out;
}

DecayEstimate estimate_decay_rate(const CoefficientModel& model, double p, std::size_t n, double T_long,
                                  const DecayOptions& options) {
    if (!model.growth.dissipation) throw std::invalid_argument(model.name + ": no dissipation constants declared");
    if (!(p >= 1.0)) throw std::invalid_argument("estimate_decay_rate: p must be >= 1");
    if (options.points < 3) throw std::invalid_argument("estimate_decay_rate: need at least three observations");
    const auto& d = *model.growth.dissipation;
    DecayEstimate est;
    est.bound = -p * (d.L5 - d.L6) / 2.0;

    const double dt = options.scheme.dt;
    const std::size_t steps = step_count(T_long, dt);
    const std::size_t first = steps / 2;
    const std::size_t stride = std::max<std::size_t>(1, (steps - first) / (options.points - 1));

    const BrownianDriver driver(options.seed);
    const Ensemble init = sample_initial(options.initial, n, model.dims.state, driver);
    IntegrateOptions io;
    std::size_t k = 0;
    io.on_step = [&](const Ensemble& e) {
        if (k >= first && (k - first) % stride == 0) {
            double s = 0.0;
            for (std::size_t i = 0; i < e.size(); ++i) s += std::pow(norm(e.state(i)), p);
            est.times.push_back(e.time);
            est.moments.push_back(s / static_cast<double>(e.size()));
        }
        ++k;
    };
    integrate(init, model, options.scheme, driver, T_long, io);

    // Drop the tail after the moment first underflows.
    constexpr double kFloor = 1e-300;
    std::size_t usable = est.moments.size();
    for (std::size_t i = 0; i < est.moments.size(); ++i) {
        if (!(est.moments[i] > kFloor)) {
            usable = i;
            est.upper_bound_only = true;
            est.notes.push_back("moment underflowed at t = " + std::to_string(est.times[i]) +
                                "; slope is an upper bound");
            break;
        }
    }
    if (usable < 3) {
        est.slope = -std::numeric_limits<double>::infinity();
        est.upper_bound_only = true;
        est.notes.push_back("fewer than three usable observations");
        return est;
    }
    const auto fit = fit_decay(std::span<const double>(est.times).first(usable),
                               std::span<const double>(est.moments).first(usable));
    est.slope = fit.rate;
    est.r_squared = fit.r_squared;
    return est;
}

MomentPair linear_mean_field_moments(const LinearMeanFieldParams& prm, double m0, double s0, double t) {
    const double a = -(prm.theta - prm.kappa);
    const double lambda = -2.0 * prm.theta + prm.sigma * prm.sigma;
    const double mean = m0 * std::exp(a * t);
    const double forcing = 2.0 * prm.kappa * m0 * m0;
    const double gap = 2.0 * a - lambda;
    const double particular = gap == 0.0 ? forcing * t * std::exp(lambda * t)
                                         : forcing * (std::exp(2.0 * a * t) - std::exp(lambda * t)) / gap;
    return {mean, s0 * std::exp(lambda * t) + particular};
}

} // namespace mvsde
