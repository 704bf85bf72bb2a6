#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "chemoflow/jko.hpp"

namespace chemoflow {

/// Header: k,t,mass_1..mass_N,linf,entropy,free_energy,phi_decrease,w2_increment,
/// el_residual,second_moment_1..second_moment_N,bound_slack. 17 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

/// Parses the CSV columns back into records; other StepRecord fields stay default.
/// Throws std::invalid_argument with the offending line number on malformed input.
std::vector<StepRecord> read_trajectory_csv(std::istream& is);

/// Plain-text run summary: parameters, admissibility data and per-run constants.
void write_summary(std::ostream& os, const Trajectory& traj);

struct TrajectoryDelta {
    std::size_t rows = 0;       // rows matched by step index
    double mass_l1 = 0.0;       // max over rows of sum_i |m_i - m'_i|
    double mass_linf = 0.0;     // max over rows and species of |m_i - m'_i|
    double linf = 0.0;          // max |linf - linf'|
    double free_energy = 0.0;   // max |F - F'|
    double entropy = 0.0;       // max |entropy - entropy'|
    double second_moment = 0.0; // max over species of |M_i - M'_i|
};

/// Compares two record lists row by row over their common prefix.
/// Throws std::invalid_argument if the species counts differ.
TrajectoryDelta compare_records(const std::vector<StepRecord>& a, const std::vector<StepRecord>& b);

}  // namespace chemoflow
