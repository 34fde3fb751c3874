#include "mvsde/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mvsde {

namespace {

double pow_abs(double v, double p) {
    const double a = std::abs(v);
    if (p == 1.0) return a;
    if (p == 2.0) return a * a;
    return std::pow(a, p);
}

double norm_pow(std::span<const double> x, double p) {
    if (x.size() == 1) return pow_abs(x[0], p);
    double sq = 0.0;
    for (double v : x) sq += v * v;
    if (p == 2.0) return sq;
    return std::pow(std::sqrt(sq), p);
}

void require_p(double p) {
    if (!(p >= 1.0) || !std::isfinite(p))
        throw std::invalid_argument("moment order p must be a finite real >= 1, got " + std::to_string(p));
}

} // namespace

EmpiricalMeasure::EmpiricalMeasure(std::span<const double> samples, std::size_t dim)
    : EmpiricalMeasure(std::vector<double>(samples.begin(), samples.end()), dim) {}

EmpiricalMeasure::EmpiricalMeasure(std::vector<double> samples, std::size_t dim) : n_(0), dim_(dim) {
    if (dim == 0) throw std::invalid_argument("measure dimension must be >= 1");
    if (samples.empty() || samples.size() % dim != 0)
        throw std::invalid_argument("measure needs N >= 1 atoms of dimension " + std::to_string(dim));
    n_ = samples.size() / dim;
    auto state = std::make_shared<State>();
    state->mean.assign(dim, 0.0);
    double second = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
        for (std::size_t k = 0; k < dim; ++k) {
            const double v = samples[j * dim + k];
            if (!std::isfinite(v))
                throw std::invalid_argument("measure atom " + std::to_string(j) + " is not finite");
            state->mean[k] += v;
            second += v * v;
        }
    }
    const double inv_n = 1.0 / static_cast<double>(n_);
    for (double& m : state->mean) m *= inv_n;
    state->second_moment = second * inv_n;
    state->samples = std::move(samples);
    state_ = std::move(state);
}

EmpiricalMeasure EmpiricalMeasure::dirac_origin(std::size_t n, std::size_t dim) {
    return EmpiricalMeasure(std::vector<double>(n * dim, 0.0), dim);
}

double EmpiricalMeasure::raw_moment(double p) const {
    require_p(p);
    if (p == 2.0) return state_->second_moment;
    {
        std::lock_guard lock(state_->cache_mutex);
        if (auto it = state_->moment_cache.find(p); it != state_->moment_cache.end()) return it->second;
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < n_; ++j) sum += norm_pow(atom(j), p);
    const double value = sum / static_cast<double>(n_);
    std::lock_guard lock(state_->cache_mutex);
    state_->moment_cache.emplace(p, value);
    return value;
}

double EmpiricalMeasure::moment_norm(double p) const {
    const double m = raw_moment(p);
    return p == 2.0 ? std::sqrt(m) : std::pow(m, 1.0 / p);
}

double EmpiricalMeasure::kernel_integral(const std::function<double(std::span<const double>)>& f) const {
    double sum = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
        const double v = f(atom(j));
        if (!std::isfinite(v))
            throw NonFiniteError("kernel_integral: integrand is not finite at atom " + std::to_string(j));
        sum += v;
    }
    return sum / static_cast<double>(n_);
}

double EmpiricalMeasure::double_kernel_integral(
    const std::function<double(std::span<const double>, std::span<const double>)>& f) const {
    double sum = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
        for (std::size_t k = 0; k < n_; ++k) {
            const double v = f(atom(j), atom(k));
            if (!std::isfinite(v))
                throw NonFiniteError("double_kernel_integral: integrand is not finite at atoms (" +
                                     std::to_string(j) + ", " + std::to_string(k) + ")");
            sum += v;
        }
    }
    const double n = static_cast<double>(n_);
    return sum / (n * n);
}

std::vector<double> EmpiricalMeasure::sorted_points() const {
    if (dim_ != 1) throw std::invalid_argument("order statistics need a 1-D measure");
    std::vector<double> pts(state_->samples);
    std::sort(pts.begin(), pts.end());
    return pts;
}

double wasserstein_1d(double p, const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    require_p(p);
    if (mu.dim() != 1 || nu.dim() != 1)
        throw std::invalid_argument("wasserstein_1d: exact distance is only available for d = 1; "
                                    "use coupling_bound in higher dimensions");
    const auto xs = mu.sorted_points();
    const auto ys = nu.sorted_points();
    const std::uint64_t n = xs.size();
    const std::uint64_t m = ys.size();

    double total = 0.0;
    if (n == m) {
        for (std::size_t j = 0; j < n; ++j) total += pow_abs(xs[j] - ys[j], p);
        total /= static_cast<double>(n);
    } else {
        // Quantile coupling: walk the merged breakpoints i/n and k/m of the two
        // inverse CDFs. In units of 1/(n*m) the breakpoints are i*m and k*n.
        std::uint64_t i = 0, k = 0, pos = 0;
        const std::uint64_t end = n * m;
        while (pos < end) {
            const std::uint64_t next = std::min((i + 1) * m, (k + 1) * n);
            total += static_cast<double>(next - pos) * pow_abs(xs[i] - ys[k], p);
            pos = next;
            if (pos == (i + 1) * m) ++i;
            if (pos == (k + 1) * n) ++k;
        }
        total /= static_cast<double>(end);
    }
    return p == 1.0 ? total : std::pow(total, 1.0 / p);
}

double coupling_bound(double p, std::span<const double> x, std::span<const double> y, std::size_t dim) {
    require_p(p);
    if (dim == 0) throw std::invalid_argument("coupling_bound: dim must be >= 1");
    if (x.size() != y.size())
        throw std::invalid_argument("coupling_bound: paired samples have different lengths (" +
                                    std::to_string(x.size()) + " vs " + std::to_string(y.size()) + ")");
    if (x.empty() || x.size() % dim != 0) throw std::invalid_argument("coupling_bound: need N >= 1 paired atoms");
    const std::size_t n = x.size() / dim;
    std::vector<double> diff(dim);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < dim; ++k) diff[k] = x[j * dim + k] - y[j * dim + k];
        total += norm_pow(diff, p);
    }
    total /= static_cast<double>(n);
    return p == 1.0 ? total : std::pow(total, 1.0 / p);
}

double coupling_bound(double p, const EmpiricalMeasure& x, const EmpiricalMeasure& y) {
    if (x.dim() != y.dim()) throw std::invalid_argument("coupling_bound: dimension mismatch");
    return coupling_bound(p, x.samples(), y.samples(), x.dim());
}

} // namespace mvsde
