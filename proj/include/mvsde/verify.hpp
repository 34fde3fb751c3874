#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mvsde/integrator.hpp"
#include "mvsde/model.hpp"

namespace mvsde {

enum class Verdict { pass, fail, inconclusive };
std::string verdict_name(Verdict v);

enum class Inequality {
    monotonicity,
    drift_lipschitz,
    diffusion_state_lipschitz,
    diffusion_measure_lipschitz,
    coercivity,
    drift_growth,
    diffusion_growth,
    lyapunov,
};
std::string inequality_name(Inequality kind);

// One concrete input to an inequality. mu and nu are row-major atom lists
// in R^dim; x_bar and nu are unused by single-point inequalities.
struct SampleInput {
    std::size_t dim = 1;
    std::vector<double> x;
    std::vector<double> x_bar;
    std::vector<double> mu;
    std::vector<double> nu;
};

// What is being tested; `bound` is read only for coercivity.
struct CheckTarget {
    Inequality kind = Inequality::coercivity;
    CoercivityBound bound;
};

struct Evaluation {
    double lhs = 0.0;
    double rhs = 0.0;
    double scale = 0.0; // magnitude of the terms, for the relative tolerance
    double margin() const { return rhs - lhs; }
    bool violated() const;
};

inline constexpr double kRelativeTolerance = 1e-9;

struct Violation {
    std::uint64_t sample = 0;
    CheckTarget target;
    SampleInput input;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;
};

struct AssumptionReport {
    std::string id;
    std::size_t samples = 0;
    std::size_t violation_count = 0;
    std::vector<Violation> violations; // the first few, ordered by sample index
    std::map<std::string, double> estimated_constants;
    std::vector<std::string> notes;
    Verdict verdict = Verdict::pass;
};

// Evaluates both sides for the model's declared constants. Monotonicity uses
// L(R) at R = max(|x|, |x_bar|). Throws std::invalid_argument when W2 is
// needed between distinct measures in dimension > 1.
Evaluation evaluate(const CoefficientModel& model, const CheckTarget& target, const SampleInput& input);

// Re-evaluates a recorded violation.
Evaluation replay(const CoefficientModel& model, const Violation& violation);

struct CheckOptions {
    std::uint64_t seed = 42;
    std::size_t max_recorded = 16;
    double x_max = 20.0; // largest |x| for unbounded samplers
};

AssumptionReport check_local_monotonicity(const CoefficientModel& model, double R, std::size_t n_samples,
                                          const CheckOptions& options = {});

enum class CoercivityMode {
    declared,    // L3(1 + |x|^2 + ||mu||_2^2) at exponent p
    sharp,       // the model's sharp_coercivity bound
    dissipative, // -L5|x|^2 + L6||mu||_2^2
};

// In dissipative mode without declared L5, L6 the checker probes the
// necessary condition 2<x,b(x,delta_0)> + ||sigma(x,delta_0)||^2 <= 0, which
// any L5 > 0 implies.
AssumptionReport check_coercivity(const CoefficientModel& model, std::size_t n_samples,
                                  CoercivityMode mode = CoercivityMode::declared, const CheckOptions& options = {});
AssumptionReport check_coercivity_bound(const CoefficientModel& model, const CoercivityBound& bound,
                                        std::size_t n_samples, const CheckOptions& options = {},
                                        std::string id = "coercivity");

// Largest p on the grid {2, 2+step, ..., p_max} for which the declared L3 bound
// shows no violations (coercivity fails monotonically in p, so the scan stops
// at the first failure). Empty if p = 2 already fails.
std::optional<double> largest_feasible_p(const CoefficientModel& model, std::size_t n_samples,
                                         const CheckOptions& options = {}, double p_max = 64.0, double step = 0.5);

// All three polynomial-Lipschitz inequalities. estimated_constants holds the
// smallest L2 that would cover the samples, per inequality.
AssumptionReport check_polynomial_lipschitz(const CoefficientModel& model, std::size_t n_samples,
                                            const CheckOptions& options = {});

AssumptionReport check_growth(const CoefficientModel& model, std::size_t n_samples, const CheckOptions& options = {});

// Sampled Lyapunov inequality plus the growth condition f(R) - kappa L(R) -> inf
// decided from leading terms. Inconclusive without a Lyapunov spec.
AssumptionReport lyapunov_check(const CoefficientModel& model, std::size_t n_samples,
                                const CheckOptions& options = {});

// f(R) - kappa L(R) -> inf for power sums.
bool divergence_condition_holds(const PowerSum& f, const PowerSum& L, double kappa);

// p >= max{gamma, 2 + 2 l3, 4 l4} and 2 <= q <= (p/2 + 1 - l3) ^ (p/2 + 2 - 2 l4).
AssumptionReport check_exponent_relations(const GrowthMeta& growth);

double phi(double x, double y);
// Max of phi on the (n x n) grid over [-2, 2]^2.
double phi_grid_max(std::size_t n);
// Grid maximum refined by Newton iterations on grad phi = 0.
double phi_extremum(std::size_t n = 801);

struct IntegrabilitySeries {
    std::vector<double> times;
    std::vector<double> log_values; // log of (1/N) sum exp(e^{-alpha t} f(|X_t^i|))
    std::vector<double> values;     // exp(log_values); may be inf
    std::vector<double> std_errors; // of values
    double ceiling = 0.0;           // ceiling_factor * values[0]
    bool exceeded = false;
};

IntegrabilitySeries monitor_exponential_integrability(const Trajectory& trajectory, const PowerSum& f, double alpha,
                                                      double ceiling_factor = 10.0);

struct DecayOptions {
    SchemeConfig scheme{SchemeKind::tamed_euler, 2e-3, 1};
    InitialLaw initial = NormalLaw{1.0, 1.0};
    std::uint64_t seed = 42;
    std::size_t points = 200; // observations in [T/2, T]
};

struct DecayEstimate {
    double slope = 0.0;      // of log (1/N) sum |X^i|^p against t over [T/2, T]
    double r_squared = 0.0;
    double bound = 0.0;      // -p (L5 - L6) / 2
    bool upper_bound_only = false; // moment underflowed; slope is an upper bound
    std::vector<double> times;
    std::vector<double> moments;
    std::vector<std::string> notes;
};

DecayEstimate estimate_decay_rate(const CoefficientModel& model, double p, std::size_t n, double T_long,
                                  const DecayOptions& options = {});

struct MomentPair {
    double mean = 0.0;
    double second = 0.0;
};

// Closed-form (E X_t, E X_t^2) of the linear mean-field limit from (m0, s0).
MomentPair linear_mean_field_moments(const LinearMeanFieldParams& params, double m0, double s0, double t);

} // namespace mvsde
