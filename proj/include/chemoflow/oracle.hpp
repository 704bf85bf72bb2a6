#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "chemoflow/fields.hpp"
#include "chemoflow/jko.hpp"

namespace chemoflow {

/// Explicit finite-volume reference run on a radial grid. Sensitivities come
/// from the initial state; decay_rates[i] >= 0 acts as -c_i rho_i and is
/// applied exactly as a factor e^{-c_i dt} after each transport substep.
struct ReferenceConfig {
    double T = 0.1;
    double dt = 0.0;            // fixed step; 0 picks it from the stability bound each step
    double dt_safety = 0.4;     // fraction of the positivity bound used
    double sample_dt = 1e-2;    // records are taken at multiples of this
    std::vector<double> decay_rates;  // empty means conservative
    double stop_linf = std::numeric_limits<double>::infinity();  // end the run early above this
    bool keep_states = true;
    std::size_t max_steps = 100000000;
};

/// Upwind chemotactic flux, centered diffusion and zero flux through r = 1.
/// The potential is recomputed with solve_dirichlet every substep. The returned
/// trajectory has one record per sample time; config.tau holds sample_dt.
/// A non-finite value ends the run with `failure` naming the substep.
Trajectory run_reference(const ReferenceConfig& config, const SpeciesState& initial);

/// Largest substep that keeps every cell nonnegative, times `safety`.
double reference_stable_dt(const SpeciesState& state, double safety);

/// First record time with L-infinity norm above `threshold`. Throws
/// std::invalid_argument if the threshold does not exceed the initial norm.
std::optional<double> detect_blowup_numeric(const Trajectory& traj, double threshold);

}  // namespace chemoflow
