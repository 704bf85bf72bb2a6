#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace chemoflow {

/// An iterative solve did not reach its tolerance.
class NumericalFailure : public std::runtime_error {
public:
    NumericalFailure(const std::string& what, std::size_t iterations, double final_error)
        : std::runtime_error(what), iterations_(iterations), final_error_(final_error) {}

    std::size_t iterations() const { return iterations_; }
    double final_error() const { return final_error_; }

private:
    std::size_t iterations_;
    double final_error_;
};

/// A time step could not be taken with the requested parameters.
class StepRejected : public std::runtime_error {
public:
    explicit StepRejected(const std::string& what, std::vector<double> history = {})
        : std::runtime_error(what), history_(std::move(history)) {}

    /// Residual history of the inner solver, when one ran.
    const std::vector<double>& history() const { return history_; }

private:
    std::vector<double> history_;
};

}  // namespace chemoflow
