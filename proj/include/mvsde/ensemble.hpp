#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvsde/measure.hpp"
#include "mvsde/rng.hpp"

namespace mvsde {

// N x d particle states at one time point. Particle i carries a stable id that
// selects its Brownian stream; ids need not be contiguous (a half-system keeps
// the ids of the particles it was split from).
struct Ensemble {
    std::size_t dim = 1;
    std::vector<double> states; // row-major N x dim
    std::vector<ParticleId> ids;
    double time = 0.0;

    std::size_t size() const noexcept { return ids.size(); }
    std::span<const double> state(std::size_t i) const noexcept {
        return std::span<const double>(states).subspan(i * dim, dim);
    }
    std::span<double> state(std::size_t i) noexcept { return std::span<double>(states).subspan(i * dim, dim); }

    EmpiricalMeasure measure() const { return EmpiricalMeasure(std::span<const double>(states), dim); }

    // Ids first, first + 1, ..., first + n - 1; states zeroed.
    static Ensemble with_ids(std::size_t n, std::size_t dim, ParticleId first = 1);
    // Sub-ensemble of particles [begin, end) keeping their ids.
    Ensemble slice(std::size_t begin, std::size_t end) const;
};

// A particle left the finite reals. Carries what is needed to reproduce it.
class BlowUpError : public std::runtime_error {
public:
    BlowUpError(ParticleId id, StepIndex step, double time, std::vector<double> pre_state,
                std::vector<double> post_state);

    ParticleId particle_id() const noexcept { return id_; }
    StepIndex step() const noexcept { return step_; }
    double time() const noexcept { return time_; }
    const std::vector<double>& pre_state() const noexcept { return pre_; }
    const std::vector<double>& post_state() const noexcept { return post_; }

private:
    ParticleId id_;
    StepIndex step_;
    double time_;
    std::vector<double> pre_;
    std::vector<double> post_;
};

} // namespace mvsde
