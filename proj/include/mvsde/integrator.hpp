#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "mvsde/ensemble.hpp"
#include "mvsde/model.hpp"
#include "mvsde/rng.hpp"

namespace mvsde {

enum class SchemeKind { tamed_euler, explicit_euler, frozen_measure_tamed };

std::string scheme_name(SchemeKind kind);
SchemeKind parse_scheme(const std::string& name);

struct SchemeConfig {
    SchemeKind kind = SchemeKind::tamed_euler;
    double dt = 1e-3;
    // Number of outer mesh intervals on [0, T] (frozen-measure scheme only).
    std::size_t outer_mesh_m = 1;

    // Throws std::invalid_argument unless dt > 0, dt divides T and, for the
    // frozen scheme, dt divides T/m (all to 1e-12 relative).
    void validate(double T) const;
};

// Number of steps of size dt covering [0, T]; throws if dt does not divide T.
std::size_t step_count(double T, double dt);

struct NormalLaw {
    double mean = 0.0;
    double variance = 1.0;
};
struct PointMassLaw {
    double x = 0.0;
};
// Maps d standard normals (from the particle's initial stream) to a state.
struct CustomLaw {
    std::function<void(std::span<const double> normals, std::span<double> out)> transform;
};
// Per-component law; every coordinate of every particle is i.i.d.
using InitialLaw = std::variant<NormalLaw, PointMassLaw, CustomLaw>;

// N particles with ids first_id.. drawn i.i.d. from `law` via each particle's
// initial stream, so particle `id` gets the same state in any ensemble.
Ensemble sample_initial(const InitialLaw& law, std::size_t n, std::size_t dim, const BrownianDriver& driver,
                        ParticleId first_id = 1);
// Fills the states of an ensemble whose ids are already set.
void sample_initial_into(Ensemble& ensemble, const InitialLaw& law, const BrownianDriver& driver);

// One synchronous step: snapshot the empirical measure of all particles,
// then advance each particle against that snapshot. The frozen-measure kind
// behaves as TamedEuler for a single step.
Ensemble step_particle_system(const Ensemble& ensemble, const CoefficientModel& model, const SchemeConfig& scheme,
                              const BrownianDriver& driver, StepIndex step_index);

struct IntegrateOptions {
    // Times at which to record snapshots; each must lie on the step grid.
    // The final time is always recorded.
    std::vector<double> observe_times;
    // Called after every step with the new ensemble (and once for the
    // initial ensemble with step index 0 before stepping).
    std::function<void(const Ensemble&)> on_step;
    // Use the serial reference kernel instead of the OpenMP kernel.
    bool serial_reference = false;
};

struct Trajectory {
    std::vector<Ensemble> snapshots; // ascending in time; last one is at T

    const Ensemble& final_state() const { return snapshots.back(); }
};

// Repeated step_particle_system from t = 0 to T. Throws BlowUpError if a
// state becomes non-finite.
Trajectory integrate(Ensemble initial, const CoefficientModel& model, const SchemeConfig& scheme,
                     const BrownianDriver& driver, double T, const IntegrateOptions& options = {});

// Two-timescale scheme: the empirical measure is refreshed only at the outer
// mesh points kT/m while particles take tamed steps of inner_dt. Step indices
// are global inner-step indices, so outer_m = T/inner_dt reproduces integrate.
Trajectory integrate_frozen_measure(Ensemble initial, const CoefficientModel& model, std::size_t outer_m,
                                    double inner_dt, const BrownianDriver& driver, double T,
                                    const IntegrateOptions& options = {});

// Thin wrappers over the OpenMP runtime.
void set_thread_count(int threads);
int thread_count();

} // namespace mvsde
