#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <utility>

namespace mvsde {

using ParticleId = std::uint64_t;
using StepIndex = std::uint64_t;

// Philox4x32-10 (Salmon et al., SC'11). Stateless: the output is a pure
// function of (counter, key).
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter ctr, Key key) noexcept;
};

// SplitMix64 finalizer; used to derive independent replication seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Seed for replication `index` of an experiment with master seed `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

// Records which (particle, step) increments were consumed. Test
// instrumentation only; a driver without a tally pays one branch.
class DrawTally {
public:
    void record(ParticleId id, StepIndex step);
    std::map<std::pair<ParticleId, StepIndex>, std::uint64_t> counts() const;
    std::uint64_t total() const;

private:
    mutable std::mutex mutex_;
    std::map<std::pair<ParticleId, StepIndex>, std::uint64_t> counts_;
};

/// Replayable source of Brownian increments keyed by
/// (master seed, particle id, step index).
///
/// Every increment is generated from its own Philox counter, so the value
/// seen by particle `id` at step `k` does not depend on how many particles
/// exist, which thread evaluates it, or in which order increments are
/// requested. This is what lets the splitting estimator drive a full
/// system and two half-systems from literally the same Brownian paths.
class BrownianDriver {
public:
    explicit BrownianDriver(std::uint64_t master_seed) noexcept;

    std::uint64_t seed() const noexcept { return seed_; }

    /// Writes `out.size()` independent N(0, dt) variates for (id, step).
    void increment(ParticleId id, StepIndex step, double dt, std::span<double> out) const;

    /// Standard normals from the initial-condition stream of `id`. This stream
    /// is disjoint from every increment stream, including step 0.
    void initial_normals(ParticleId id, std::span<double> out) const;

    /// Uniform (0,1) variates from an auxiliary stream; used by samplers
    /// that need more than Gaussians (verification checkers).
    void uniforms(ParticleId id, std::uint32_t block, std::span<double> out) const;

    void attach_tally(std::shared_ptr<DrawTally> tally) { tally_ = std::move(tally); }

private:
    enum class Purpose : std::uint32_t { increment = 0, initial = 1, auxiliary = 2 };

    void normals(Purpose purpose, ParticleId id, StepIndex step, std::span<double> out) const;

    std::uint64_t seed_;
    Philox4x32::Key key_;
    std::shared_ptr<DrawTally> tally_;
};

} // namespace mvsde
