#include "mvsde/kernels.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include <omp.h>

namespace mvsde::kernels {

namespace {

struct Scratch {
    std::vector<double> drift;
    std::vector<double> diffusion;
    std::vector<double> noise;

    explicit Scratch(const ModelDims& dims)
        : drift(dims.state), diffusion(dims.state * dims.noise), noise(dims.noise) {}
};

// Returns false if the new state is not finite.
inline bool advance_one(const StepArgs& a, std::span<const double> x, ParticleId id, std::span<double> y,
                        Scratch& s) {
    const std::size_t d = a.model.dims.state;
    const std::size_t m1 = a.model.dims.noise;
    a.model.drift(x, a.frozen, s.drift);
    a.model.diffusion(x, a.frozen, s.diffusion);
    a.driver.increment(id, a.step, a.dt, s.noise);

    double drift_scale = 1.0;
    double diffusion_scale = 1.0;
    if (a.taming == Taming::tamed) {
        double b2 = 0.0;
        for (double v : s.drift) b2 += v * v;
        double s2 = 0.0;
        for (double v : s.diffusion) s2 += v * v;
        drift_scale = 1.0 / (1.0 + a.dt * std::sqrt(b2));
        diffusion_scale = 1.0 / std::sqrt(1.0 + a.dt * s2);
    }

    bool finite = true;
    for (std::size_t k = 0; k < d; ++k) {
        double dw = 0.0;
        for (std::size_t j = 0; j < m1; ++j) dw += s.diffusion[k * m1 + j] * s.noise[j];
        y[k] = x[k] + drift_scale * s.drift[k] * a.dt + diffusion_scale * dw;
        finite = finite && std::isfinite(y[k]);
    }
    return finite;
}

} // namespace

std::optional<Failure> advance_serial(const StepArgs& args, std::span<const double> in, std::span<const ParticleId> ids,
                                      std::size_t dim, std::span<double> out) {
    Scratch scratch(args.model.dims);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (!advance_one(args, in.subspan(i * dim, dim), ids[i], out.subspan(i * dim, dim), scratch))
            return Failure{i};
    }
    return std::nullopt;
}

std::optional<Failure> advance_parallel(const StepArgs& args, std::span<const double> in,
                                        std::span<const ParticleId> ids, std::size_t dim, std::span<double> out) {
    const auto n = static_cast<std::ptrdiff_t>(ids.size());
    constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
    std::size_t first_bad = kNone;
    // Model callbacks may throw (e.g. a dimension check); exceptions must not
    // cross the parallel region, so the first one is captured and rethrown.
    std::exception_ptr error;

#pragma omp parallel if (ids.size() >= kParallelThreshold) reduction(min : first_bad)
    {
        Scratch scratch(args.model.dims);
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const auto u = static_cast<std::size_t>(i);
            try {
                if (!advance_one(args, in.subspan(u * dim, dim), ids[u], out.subspan(u * dim, dim), scratch))
                    first_bad = std::min(first_bad, u);
            } catch (...) {
#pragma omp critical(mvsde_kernel_error)
                if (!error) error = std::current_exception();
            }
        }
    }
    if (error) std::rethrow_exception(error);
    if (first_bad != kNone) return Failure{first_bad};
    return std::nullopt;
}

} // namespace mvsde::kernels
