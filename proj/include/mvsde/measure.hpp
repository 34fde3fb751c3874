#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvsde {

// Raised when a functional evaluated over a measure produces NaN/inf.
class NonFiniteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Uniform empirical measure (1/N) sum_j delta_{x_j} over N points in R^d.
///
/// Immutable after construction. The mean and second raw moment are computed
/// eagerly; other moments are cached on first request under a lock, so one
/// instance can be shared by all threads of a particle step.
class EmpiricalMeasure {
public:
    // `samples` is row-major N x dim. Throws std::invalid_argument when
    // N == 0, dim == 0, the size is not a multiple of dim, or a sample is not finite.
    EmpiricalMeasure(std::vector<double> samples, std::size_t dim);
    EmpiricalMeasure(std::span<const double> samples, std::size_t dim);

    // 1-D convenience.
    static EmpiricalMeasure from_points(std::vector<double> points) { return {std::move(points), 1}; }
    // N atoms at the origin of R^dim.
    static EmpiricalMeasure dirac_origin(std::size_t n, std::size_t dim = 1);

    std::size_t size() const noexcept { return n_; }
    std::size_t dim() const noexcept { return dim_; }
    std::span<const double> samples() const noexcept { return state_->samples; }
    std::span<const double> atom(std::size_t j) const noexcept {
        return std::span<const double>(state_->samples).subspan(j * dim_, dim_);
    }

    /// (1/N) sum_j |x_j|^p for p >= 1; cached.
    double raw_moment(double p) const;
    /// ||mu||_p = raw_moment(p)^{1/p}.
    double moment_norm(double p) const;

    std::span<const double> mean() const noexcept { return state_->mean; }
    /// First component of the mean; the common case for 1-D models.
    double mean_scalar() const noexcept { return state_->mean[0]; }

    double kernel_integral(const std::function<double(std::span<const double>)>& f) const;
    double double_kernel_integral(
        const std::function<double(std::span<const double>, std::span<const double>)>& f) const;

    /// Ascending order statistics; requires dim() == 1.
    std::vector<double> sorted_points() const;

private:
    struct State {
        std::vector<double> samples;
        std::vector<double> mean;
        double second_moment = 0.0;
        mutable std::mutex cache_mutex;
        mutable std::map<double, double> moment_cache;
    };

    std::size_t n_;
    std::size_t dim_;
    std::shared_ptr<const State> state_;
};

/// Exact 1-D Wasserstein-p distance between empirical measures.
///
/// Equal atom counts use sorted pairing of order statistics. Unequal counts
/// use the monotone (quantile) coupling, which is the same as expanding both
/// measures onto lcm(N, M) equal-mass atoms and pairing those in order;
/// segment boundaries are compared in exact integer arithmetic.
/// Throws std::invalid_argument if either measure has dim() != 1 or p < 1.
double wasserstein_1d(double p, const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

/// ((1/N) sum_j |x_j - y_j|^p)^{1/p} for a given pairing; any dimension.
/// Upper-bounds W_p of the induced empirical measures.
double coupling_bound(double p, std::span<const double> x, std::span<const double> y, std::size_t dim = 1);
double coupling_bound(double p, const EmpiricalMeasure& x, const EmpiricalMeasure& y);

} // namespace mvsde
