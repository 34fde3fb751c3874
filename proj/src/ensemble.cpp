#include "mvsde/ensemble.hpp"

#include <sstream>

namespace mvsde {

Ensemble Ensemble::with_ids(std::size_t n, std::size_t dim, ParticleId first) {
    if (dim == 0) throw std::invalid_argument("ensemble dimension must be >= 1");
    Ensemble e;
    e.dim = dim;
    e.states.assign(n * dim, 0.0);
    e.ids.resize(n);
    for (std::size_t i = 0; i < n; ++i) e.ids[i] = first + i;
    return e;
}

Ensemble Ensemble::slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > size()) throw std::out_of_range("ensemble slice out of range");
    Ensemble e;
    e.dim = dim;
    e.time = time;
    e.states.assign(states.begin() + static_cast<std::ptrdiff_t>(begin * dim),
                    states.begin() + static_cast<std::ptrdiff_t>(end * dim));
    e.ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(begin), ids.begin() + static_cast<std::ptrdiff_t>(end));
    return e;
}

namespace {

std::string blow_up_message(ParticleId id, StepIndex step, double time, const std::vector<double>& pre,
                            const std::vector<double>& post) {
    std::ostringstream os;
    os.precision(17);
    os << "numerical blow-up: particle " << id << " at step " << step << " (t = " << time << "): pre-state (";
    for (std::size_t k = 0; k < pre.size(); ++k) os << (k ? ", " : "") << pre[k];
    os << ") -> (";
    for (std::size_t k = 0; k < post.size(); ++k) os << (k ? ", " : "") << post[k];
    os << ")";
    return os.str();
}

} // namespace

BlowUpError::BlowUpError(ParticleId id, StepIndex step, double time, std::vector<double> pre_state,
                         std::vector<double> post_state)
    : std::runtime_error(blow_up_message(id, step, time, pre_state, post_state)),
      id_(id),
      step_(step),
      time_(time),
      pre_(std::move(pre_state)),
      post_(std::move(post_state)) {}

} // namespace mvsde
