#include "mvsde/chaos.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "mvsde/kernels.hpp"

namespace mvsde {

namespace {

double rms_gap(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double diff = a[k] - b[k];
        sum += diff * diff;
    }
    return sum;
}

struct LinearFit {
    double slope;
    double intercept;
    double r_squared;
};

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    const double slope = sxy / sxx;
    const double r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return {slope, my - slope * mx, r2};
}

std::vector<double> split_series(const CoefficientModel& model, const Ensemble& full0, std::span<const double> times,
                                 const SchemeConfig& scheme, const BrownianDriver& driver) {
    const std::size_t n = full0.size();
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("splitting_error: N must be even and >= 2");
    if (times.empty()) throw std::invalid_argument("splitting_error: no observation times");
    const double T = times.back();
    const std::size_t dim = full0.dim;
    IntegrateOptions opts;
    opts.observe_times.assign(times.begin(), times.end());

    const auto full = integrate(full0, model, scheme, driver, T, opts);
    const auto half1 = integrate(full0.slice(0, n / 2), model, scheme, driver, T, opts);
    const auto half2 = integrate(full0.slice(n / 2, n), model, scheme, driver, T, opts);

    // Snapshots are recorded once per distinct grid time; map the requested
    // times back onto them.
    std::vector<double> out;
    out.reserve(times.size());
    for (double t : times) {
        std::size_t s = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < full.snapshots.size(); ++i) {
            const double dist = std::abs(full.snapshots[i].time - t);
            if (dist < best) {
                best = dist;
                s = i;
            }
        }
        const auto& f = full.snapshots[s];
        const auto& h1 = half1.snapshots[s];
        const auto& h2 = half2.snapshots[s];
        const std::size_t split = (n / 2) * dim;
        const std::span<const double> fs(f.states);
        double sum = rms_gap(fs.first(split), h1.states) + rms_gap(fs.subspan(split), h2.states);
        out.push_back(std::sqrt(sum / static_cast<double>(n)));
    }
    return out;
}

} // namespace

std::vector<double> splitting_error_series(const CoefficientModel& model, std::size_t n,
                                           std::span<const double> times, const SchemeConfig& scheme,
                                           const BrownianDriver& driver, const InitialLaw& initial) {
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("splitting_error: N must be even and >= 2");
    return split_series(model, sample_initial(initial, n, model.dims.state, driver, 1), times, scheme, driver);
}

double splitting_error(const CoefficientModel& model, const Ensemble& initial, double T, const SchemeConfig& scheme,
                       const BrownianDriver& driver) {
    const double times[] = {T};
    return split_series(model, initial, times, scheme, driver).back();
}

double splitting_error(const CoefficientModel& model, std::size_t n, double T, const SchemeConfig& scheme,
                       const BrownianDriver& driver, const InitialLaw& initial) {
    const double times[] = {T};
    return splitting_error_series(model, n, times, scheme, driver, initial).back();
}

DecoupledResult decoupled_error(const CoefficientModel& model, std::size_t n, std::size_t m_ref, double T,
                                const SchemeConfig& scheme, const BrownianDriver& driver,
                                const InitialLaw& initial) {
    if (n == 0) throw std::invalid_argument("decoupled_error: N must be >= 1");
    if (m_ref == 0) throw std::invalid_argument("decoupled_error: reference cloud must be non-empty");
    scheme.validate(T);
    if (scheme.kind == SchemeKind::frozen_measure_tamed)
        throw std::invalid_argument("decoupled_error: use tamed or explicit stepping");
    DecoupledResult result;
    if (m_ref < 8 * n)
        result.warnings.push_back("reference cloud M_ref = " + std::to_string(m_ref) + " is below 8N = " +
                                  std::to_string(8 * n) + "; its own chaos error may dominate");

    const std::size_t dim = model.dims.state;
    Ensemble interacting = sample_initial(initial, n, dim, driver, 1);
    Ensemble copies = interacting;
    Ensemble reference = sample_initial(initial, m_ref, dim, driver, n + 1);
    const auto taming = scheme.kind == SchemeKind::explicit_euler ? kernels::Taming::none : kernels::Taming::tamed;
    const std::size_t steps = step_count(T, scheme.dt);

    std::vector<double> buf;
    const auto advance = [&](Ensemble& e, const EmpiricalMeasure& mu, StepIndex k) {
        buf.resize(e.states.size());
        const kernels::StepArgs args{model, mu, driver, k, scheme.dt, taming};
        if (auto fail = kernels::advance_parallel(args, e.states, e.ids, e.dim, buf)) {
            const auto pre = e.state(fail->index);
            const auto post = std::span<const double>(buf).subspan(fail->index * e.dim, e.dim);
            throw BlowUpError(e.ids[fail->index], k, e.time, {pre.begin(), pre.end()}, {post.begin(), post.end()});
        }
        e.states.swap(buf);
        e.time = static_cast<double>(k + 1) * scheme.dt;
    };

    for (std::size_t k = 0; k < steps; ++k) {
        const auto mu_n = interacting.measure();
        const auto mu_ref = reference.measure();
        advance(interacting, mu_n, k);
        advance(copies, mu_ref, k);
        advance(reference, mu_ref, k);
    }
    result.error = std::sqrt(rms_gap(interacting.states, copies.states) / static_cast<double>(n));
    return result;
}

ChaosReport run_chaos_sweep(const CoefficientModel& model, std::size_t n1, std::size_t levels, double T,
                            std::size_t replications, const SchemeConfig& scheme, std::uint64_t seed,
                            const ChaosSweepOptions& options) {
    if (levels == 0) throw std::invalid_argument("run_chaos_sweep: levels must be >= 1");
    if (replications == 0) throw std::invalid_argument("run_chaos_sweep: U must be >= 1");
    if (options.estimator == ChaosEstimator::splitting && (n1 < 2 || n1 % 2 != 0))
        throw std::invalid_argument("run_chaos_sweep: N_1 must be even");
    if (n1 == 0) throw std::invalid_argument("run_chaos_sweep: N_1 must be >= 1");
    scheme.validate(T);

    ChaosReport report;
    report.horizon = T;
    report.replications = replications;

    for (std::size_t l = 0; l < levels; ++l) {
        const std::size_t n = n1 << l;
        std::vector<double> samples(replications, 0.0);
        std::exception_ptr error;
        const auto reps = static_cast<std::ptrdiff_t>(replications);
#pragma omp parallel for schedule(dynamic, 1)
        for (std::ptrdiff_t u = 0; u < reps; ++u) {
            try {
                const BrownianDriver driver(derive_seed(seed, static_cast<std::uint64_t>(u)));
                samples[static_cast<std::size_t>(u)] =
                    options.estimator == ChaosEstimator::splitting
                        ? splitting_error(model, n, T, scheme, driver, options.initial)
                        : decoupled_error(model, n, options.reference_factor * n, T, scheme, driver, options.initial)
                              .error;
            } catch (...) {
#pragma omp critical(mvsde_sweep_error)
                if (!error) error = std::current_exception();
            }
        }
        if (error) {
            try {
                std::rethrow_exception(error);
            } catch (const BlowUpError& e) {
                report.failure = "level N = " + std::to_string(n) + ": " + e.what();
                report.blow_up = true;
            } catch (const std::exception& e) {
                report.failure = "level N = " + std::to_string(n) + ": " + e.what();
            }
            break;
        }
        const double u = static_cast<double>(replications);
        const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / u;
        double var = 0.0;
        for (double s : samples) var += (s - mean) * (s - mean);
        const double se = replications > 1 ? std::sqrt(var / (u - 1.0) / u) : 0.0;
        report.levels.push_back(n);
        report.errors.push_back(mean);
        report.std_errors.push_back(se);
    }

    for (std::size_t l = 1; l < report.errors.size(); ++l)
        report.slopes.push_back(std::log2(report.errors[l]) - std::log2(report.errors[l - 1]));
    if (report.errors.size() >= 2) {
        std::vector<double> x, y;
        for (std::size_t l = 0; l < report.errors.size(); ++l) {
            x.push_back(std::log2(static_cast<double>(report.levels[l])));
            y.push_back(std::log2(report.errors[l]));
        }
        report.fitted_slope = least_squares(x, y).slope;
    } else {
        report.fitted_slope = std::numeric_limits<double>::quiet_NaN();
    }
    return report;
}

double phi_rate(double n, int d, double q_tilde) {
    if (!(n >= 1.0)) throw std::invalid_argument("phi_rate: N must be >= 1");
    if (d < 1) throw std::invalid_argument("phi_rate: dimension must be >= 1");
    if (!(q_tilde > 2.0)) throw std::invalid_argument("phi_rate: moment order must satisfy q > 2");
    if (d <= 4 && q_tilde == 4.0) throw std::invalid_argument("phi_rate: q = 4 is excluded for d <= 4");
    if (d > 4 && q_tilde == static_cast<double>(d) / (d - 2))
        throw std::invalid_argument("phi_rate: q = d/(d-2) is excluded for d > 4");
    const double tail = std::pow(n, -(q_tilde - 2.0) / q_tilde);
    if (d < 4) return 1.0 / std::sqrt(n) + tail;
    if (d == 4) return std::log1p(n) / std::sqrt(n) + tail;
    return std::pow(n, -2.0 / d) + tail;
}

DecayFit fit_decay(std::span<const double> times, std::span<const double> values) {
    if (times.size() != values.size()) throw std::invalid_argument("fit_decay: times and values differ in length");
    DecayFit fit;
    std::vector<double> t, y;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (values[i] > 0.0 && std::isfinite(values[i])) {
            t.push_back(times[i]);
            y.push_back(std::log(values[i]));
        } else {
            ++fit.excluded;
        }
    }
    if (fit.excluded > 0)
        fit.warnings.push_back(std::to_string(fit.excluded) + " non-positive observation(s) excluded");
    if (t.size() < 3) throw std::invalid_argument("fit_decay: need at least three positive observations");
    const auto lf = least_squares(t, y);
    fit.rate = lf.slope;
    fit.intercept = lf.intercept;
    fit.r_squared = lf.r_squared;
    fit.used = t.size();
    return fit;
}

} // namespace mvsde
