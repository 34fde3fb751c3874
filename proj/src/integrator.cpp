#include "mvsde/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <omp.h>

#include "mvsde/kernels.hpp"

namespace mvsde {

namespace {

constexpr double kGridTolerance = 1e-12;

// Step index n with |n*dt - t| <= tol*max(t, dt); throws otherwise.
std::size_t grid_index(double t, double dt, const char* what) {
    const double ratio = t / dt;
    const double n = std::round(ratio);
    if (std::abs(n * dt - t) > kGridTolerance * std::max(t, dt)) {
        throw std::invalid_argument(std::string(what) + " = " + std::to_string(t) +
                                    " is not an integer multiple of dt = " + std::to_string(dt));
    }
    return static_cast<std::size_t>(n);
}

struct StepPlan {
    kernels::Taming taming;
    double dt;
    std::size_t steps;
    std::size_t refresh_every; // measure snapshot every this many steps
};

Trajectory run(Ensemble current, const CoefficientModel& model, const StepPlan& plan, const BrownianDriver& driver,
               double T, const IntegrateOptions& options) {
    if (current.size() == 0) throw std::invalid_argument("integrate: ensemble is empty");
    if (current.dim != model.dims.state) throw std::invalid_argument("integrate: ensemble/model dimension mismatch");
    for (double v : current.states)
        if (!std::isfinite(v)) throw std::invalid_argument("integrate: initial ensemble is not finite");

    std::vector<std::size_t> observe;
    observe.reserve(options.observe_times.size());
    for (double t : options.observe_times) {
        if (t < 0.0 || t > T * (1.0 + kGridTolerance)) throw std::invalid_argument("observation time outside [0, T]");
        observe.push_back(plan.steps == 0 ? 0 : grid_index(t, plan.dt, "observation time"));
    }
    std::sort(observe.begin(), observe.end());
    observe.erase(std::unique(observe.begin(), observe.end()), observe.end());

    Trajectory traj;
    auto next_obs = observe.begin();
    const auto maybe_record = [&](std::size_t k) {
        while (next_obs != observe.end() && *next_obs < k) ++next_obs;
        if (next_obs != observe.end() && *next_obs == k && k != plan.steps) {
            traj.snapshots.push_back(current);
            ++next_obs;
        }
    };

    if (options.on_step) options.on_step(current);
    maybe_record(0);

    const double t0 = current.time;
    std::vector<double> next(current.states.size());
    std::optional<EmpiricalMeasure> frozen;
    for (std::size_t k = 0; k < plan.steps; ++k) {
        if (k % plan.refresh_every == 0) frozen.emplace(current.measure());
        const kernels::StepArgs args{model, *frozen, driver, k, plan.dt, plan.taming};
        const auto failure = options.serial_reference
                                 ? kernels::advance_serial(args, current.states, current.ids, current.dim, next)
                                 : kernels::advance_parallel(args, current.states, current.ids, current.dim, next);
        if (failure) {
            const std::size_t i = failure->index;
            const auto pre = current.state(i);
            const auto post = std::span<const double>(next).subspan(i * current.dim, current.dim);
            throw BlowUpError(current.ids[i], k, t0 + static_cast<double>(k) * plan.dt,
                              std::vector<double>(pre.begin(), pre.end()),
                              std::vector<double>(post.begin(), post.end()));
        }
        current.states.swap(next);
        current.time = (k + 1 == plan.steps) ? t0 + T : t0 + static_cast<double>(k + 1) * plan.dt;
        if (options.on_step) options.on_step(current);
        maybe_record(k + 1);
    }
    traj.snapshots.push_back(std::move(current));
    return traj;
}

} // namespace

std::string scheme_name(SchemeKind kind) {
    switch (kind) {
    case SchemeKind::tamed_euler:
        return "tamed";
    case SchemeKind::explicit_euler:
        return "explicit";
    case SchemeKind::frozen_measure_tamed:
        return "frozen";
    }
    return "unknown";
}

SchemeKind parse_scheme(const std::string& name) {
    if (name == "tamed") return SchemeKind::tamed_euler;
    if (name == "explicit") return SchemeKind::explicit_euler;
    if (name == "frozen") return SchemeKind::frozen_measure_tamed;
    throw std::invalid_argument("unknown scheme '" + name + "' (expected tamed, explicit or frozen)");
}

std::size_t step_count(double T, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be a positive finite number");
    if (!(T >= 0.0) || !std::isfinite(T)) throw std::invalid_argument("T must be a finite number >= 0");
    if (T == 0.0) return 0;
    return grid_index(T, dt, "T");
}

void SchemeConfig::validate(double T) const {
    const std::size_t steps = step_count(T, dt);
    if (kind == SchemeKind::frozen_measure_tamed) {
        if (outer_mesh_m == 0) throw std::invalid_argument("frozen-measure scheme needs outer_mesh_m >= 1");
        if (steps % outer_mesh_m != 0)
            throw std::invalid_argument("dt must divide T/m for the frozen-measure scheme");
    }
}

void sample_initial_into(Ensemble& ensemble, const InitialLaw& law, const BrownianDriver& driver) {
    const std::size_t dim = ensemble.dim;
    std::vector<double> z(dim);
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        auto out = ensemble.state(i);
        std::visit(
            [&](const auto& l) {
                using L = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<L, PointMassLaw>) {
                    std::fill(out.begin(), out.end(), l.x);
                } else if constexpr (std::is_same_v<L, NormalLaw>) {
                    driver.initial_normals(ensemble.ids[i], z);
                    const double sd = std::sqrt(l.variance);
                    for (std::size_t k = 0; k < dim; ++k) out[k] = l.mean + sd * z[k];
                } else {
                    driver.initial_normals(ensemble.ids[i], z);
                    l.transform(z, out);
                }
            },
            law);
    }
}

Ensemble sample_initial(const InitialLaw& law, std::size_t n, std::size_t dim, const BrownianDriver& driver,
                        ParticleId first_id) {
    if (n == 0) throw std::invalid_argument("sample_initial: N must be >= 1");
    std::visit(
        [](const auto& l) {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, NormalLaw>) {
                if (!(l.variance >= 0.0) || !std::isfinite(l.variance) || !std::isfinite(l.mean))
                    throw std::invalid_argument("normal law needs a finite mean and variance >= 0");
            } else if constexpr (std::is_same_v<L, PointMassLaw>) {
                if (!std::isfinite(l.x)) throw std::invalid_argument("point mass must be finite");
            } else {
                if (!l.transform) throw std::invalid_argument("custom law needs a transform");
            }
        },
        law);
    Ensemble e = Ensemble::with_ids(n, dim, first_id);
    sample_initial_into(e, law, driver);
    return e;
}

Ensemble step_particle_system(const Ensemble& ensemble, const CoefficientModel& model, const SchemeConfig& scheme,
                              const BrownianDriver& driver, StepIndex step_index) {
    if (!(scheme.dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (ensemble.dim != model.dims.state) throw std::invalid_argument("ensemble/model dimension mismatch");
    const auto snapshot = ensemble.measure();
    const kernels::StepArgs args{model, snapshot, driver, step_index, scheme.dt,
                                 scheme.kind == SchemeKind::explicit_euler ? kernels::Taming::none
                                                                           : kernels::Taming::tamed};
    Ensemble next = ensemble;
    if (auto failure = kernels::advance_parallel(args, ensemble.states, ensemble.ids, ensemble.dim, next.states)) {
        const std::size_t i = failure->index;
        const auto pre = ensemble.state(i);
        const auto post = next.state(i);
        throw BlowUpError(ensemble.ids[i], step_index, ensemble.time, {pre.begin(), pre.end()},
                          {post.begin(), post.end()});
    }
    next.time = ensemble.time + scheme.dt;
    return next;
}

Trajectory integrate(Ensemble initial, const CoefficientModel& model, const SchemeConfig& scheme,
                     const BrownianDriver& driver, double T, const IntegrateOptions& options) {
    scheme.validate(T);
    if (scheme.kind == SchemeKind::frozen_measure_tamed)
        return integrate_frozen_measure(std::move(initial), model, scheme.outer_mesh_m, scheme.dt, driver, T,
                                        options);
    const StepPlan plan{scheme.kind == SchemeKind::explicit_euler ? kernels::Taming::none : kernels::Taming::tamed,
                        scheme.dt, step_count(T, scheme.dt), 1};
    return run(std::move(initial), model, plan, driver, T, options);
}

Trajectory integrate_frozen_measure(Ensemble initial, const CoefficientModel& model, std::size_t outer_m,
                                    double inner_dt, const BrownianDriver& driver, double T,
                                    const IntegrateOptions& options) {
    if (outer_m == 0) throw std::invalid_argument("integrate_frozen_measure: outer_m must be >= 1");
    const std::size_t steps = step_count(T, inner_dt);
    if (steps > 0 && steps % outer_m != 0)
        throw std::invalid_argument("integrate_frozen_measure: inner_dt must divide T/outer_m");
    const StepPlan plan{kernels::Taming::tamed, inner_dt, steps, steps == 0 ? 1 : steps / outer_m};
    return run(std::move(initial), model, plan, driver, T, options);
}

void set_thread_count(int threads) {
    if (threads > 0) omp_set_num_threads(threads);
}

int thread_count() { return omp_get_max_threads(); }

} // namespace mvsde
