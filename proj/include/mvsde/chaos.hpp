#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvsde/integrator.hpp"
#include "mvsde/model.hpp"
#include "mvsde/rng.hpp"

namespace mvsde {

// Brownian-splitting chaos error at time T:
//   sqrt((1/N) sum_j |X_T^{j,N} - Xs_T^{j,N}|^2)
// where X is the full N-particle system and Xs is made of two independent
// half-systems. Half 1 holds particles 1..N/2, half 2 holds N/2+1..N; each
// keeps its particles' ids (hence their initial states and Brownian paths)
// but sees only its own half-empirical measure. N must be even.
double splitting_error(const CoefficientModel& model, std::size_t n, double T, const SchemeConfig& scheme,
                       const BrownianDriver& driver, const InitialLaw& initial = NormalLaw{});

// Same estimator from a given initial ensemble of even size; the halves are
// its first and second N/2 rows, each keeping its ids.
double splitting_error(const CoefficientModel& model, const Ensemble& initial, double T, const SchemeConfig& scheme,
                       const BrownianDriver& driver);

// Same estimator evaluated at each of `times` (ascending, inside [0, T]);
// T is the last entry.
std::vector<double> splitting_error_series(const CoefficientModel& model, std::size_t n,
                                           std::span<const double> times, const SchemeConfig& scheme,
                                           const BrownianDriver& driver, const InitialLaw& initial = NormalLaw{});

struct DecoupledResult {
    double error = 0.0;
    std::vector<std::string> warnings;
};

// RMS terminal gap between N interacting particles and N non-interacting
// copies driven by the same Brownian paths. The copies' law is represented by
// an independent reference cloud of m_ref particles (ids N+1..N+m_ref) that
// evolves as its own particle system. Warns when m_ref < 8N.
DecoupledResult decoupled_error(const CoefficientModel& model, std::size_t n, std::size_t m_ref, double T,
                                const SchemeConfig& scheme, const BrownianDriver& driver,
                                const InitialLaw& initial = NormalLaw{});

enum class ChaosEstimator { splitting, decoupled };

struct ChaosSweepOptions {
    InitialLaw initial = NormalLaw{};
    ChaosEstimator estimator = ChaosEstimator::splitting;
    std::size_t reference_factor = 64; // m_ref = factor * N for the decoupled estimator
};

struct ChaosReport {
    std::vector<std::size_t> levels;   // N_l = N_1 2^l
    std::vector<double> errors;        // mean over replications
    std::vector<double> std_errors;    // sample sd / sqrt(U)
    std::vector<double> slopes;        // log2 e_{l+1} - log2 e_l
    double fitted_slope = 0.0;         // least squares of log2 e on log2 N; NaN with one level
    double horizon = 0.0;
    std::size_t replications = 0;
    std::optional<std::string> failure; // set if a level aborted; completed levels are kept
    bool blow_up = false;               // the failure was a numerical blow-up
};

// Replication u uses driver seed derive_seed(seed, u) at every level.
ChaosReport run_chaos_sweep(const CoefficientModel& model, std::size_t n1, std::size_t levels, double T,
                            std::size_t replications, const SchemeConfig& scheme, std::uint64_t seed,
                            const ChaosSweepOptions& options = {});

// Empirical-measure rate without its constant:
//   d < 4:  N^{-1/2} + N^{-(q-2)/q}
//   d = 4:  N^{-1/2} log(1+N) + N^{-(q-2)/q}
//   d > 4:  N^{-2/d} + N^{-(q-2)/q}
// Requires q > 2, q != 4 for d <= 4 and q != d/(d-2) for d > 4.
double phi_rate(double n, int d, double q_tilde);

struct DecayFit {
    double rate = 0.0;      // slope of log(theta) against t
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t used = 0;
    std::size_t excluded = 0; // non-positive observations dropped
    std::vector<std::string> warnings;
};

// Least-squares fit of log theta(t) = intercept + rate * t. Needs at least
// three positive observations.
DecayFit fit_decay(std::span<const double> times, std::span<const double> values);

} // namespace mvsde
