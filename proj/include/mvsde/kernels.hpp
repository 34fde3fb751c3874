#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "mvsde/ensemble.hpp"
#include "mvsde/measure.hpp"
#include "mvsde/model.hpp"
#include "mvsde/rng.hpp"

namespace mvsde::kernels {

enum class Taming { none, tamed };

struct StepArgs {
    const CoefficientModel& model;
    const EmpiricalMeasure& frozen; // measure snapshot taken before the step
    const BrownianDriver& driver;
    StepIndex step;
    double dt;
    Taming taming;
};

// First particle (lowest index) whose post-state is not finite.
struct Failure {
    std::size_t index;
};

// One explicit step of every particle of `in` against the frozen measure,
// written to `out` (same shape as `in`; must not alias it).
//
// Tamed: X + b/(1+dt|b|) dt + sigma/(1+dt||sigma||^2)^{1/2} dW.
// The serial loop is the reference; the OpenMP version must match it bit for
// bit, because each particle's update reads only its own state, the shared
// snapshot and its own Brownian stream.
std::optional<Failure> advance_serial(const StepArgs& args, std::span<const double> in, std::span<const ParticleId> ids,
                                      std::size_t dim, std::span<double> out);
std::optional<Failure> advance_parallel(const StepArgs& args, std::span<const double> in,
                                        std::span<const ParticleId> ids, std::size_t dim, std::span<double> out);

// Below this many particles the parallel kernel runs on one thread.
inline constexpr std::size_t kParallelThreshold = 256;

} // namespace mvsde::kernels
