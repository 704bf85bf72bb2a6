#pragma once

#include "chemoflow/jko.hpp"

namespace chemoflow::detail {

StepResult jko_step_radial(double tau, const SpeciesState& predictor, double chi_val, const StepOptions& opts);
StepResult jko_step_box(double tau, const SpeciesState& predictor, double chi_val, const StepOptions& opts);

/// Strictly positive starting point close to the predictor.
std::vector<std::vector<double>> initial_cell_masses(const SpeciesState& predictor, double cap);

}  // namespace chemoflow::detail
