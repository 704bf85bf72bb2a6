#pragma once

#include <cstddef>
#include <vector>

#include "chemoflow/fields.hpp"

namespace chemoflow {

/// How a radial density is read as a measure.
/// Piecewise: uniform within each annulus (the default, smooth in the data).
/// Atomic: each cell's mass sits on the circle through its center radius;
/// the cost then equals the linear-programming optimum over cell couplings.
enum class RadialModel { Piecewise, Atomic };

/// Cumulative-mass description of a radial measure.
struct RadialQuantile {
    std::vector<double> cum;      // mass inside edge e, e = 0..n
    std::vector<double> s;        // squared edge radii
    std::vector<double> density;  // per cell
    std::vector<double> centers;  // cell center radii (atomic model)
    RadialModel model = RadialModel::Piecewise;

    static RadialQuantile from(const DensityField& f, RadialModel model);
    double total() const { return cum.back(); }
    /// Radius R(q) at which the cumulative mass reaches q (left-continuous inverse).
    double radius(double q) const;
};

struct TransportResult {
    double cost2 = 0.0;
    /// Kantorovich potential on the first measure, cell averages, sum psi * measure = 0.
    std::vector<double> psi;
    /// Radial piecewise model: psi at the n+1 edges with the same normalization.
    std::vector<double> psi_edges;
    /// Radial piecewise: T(r_e) at the edges. Radial atomic: barycentric image of
    /// each cell center. Box: empty.
    std::vector<double> map;
    /// Box: dense coupling, row = cell of the first measure, column = second.
    std::vector<double> plan;
    RadialQuantile source, target;  // radial only
    std::size_t iterations = 0;
    double marginal_error = 0.0;
    double eps = 0.0;
    /// Box entropic: plan cost at the end of each annealing stage.
    std::vector<double> stage_costs;
};

/// Squared W2 between equal-mass radial densities by quantile matching.
/// The map and psi describe transporting `mu` onto `rho`.
/// Throws std::invalid_argument when masses differ by more than 1e-10 relative.
TransportResult w2_radial(const DensityField& mu, const DensityField& rho,
                          RadialModel model = RadialModel::Piecewise);

struct EntropicOptions {
    double marginal_tol = 1e-9;           // L1, relative to the mass
    std::size_t max_iterations = 200000;  // over all stages
    double anneal_factor = 0.5;
    std::size_t polish_after = 2000;      // final-stage sweeps before Newton on the potentials
};

/// Entropic transport between box densities with eps-annealing down to `eps`.
/// cost2 is the transport cost of the final plan, without the entropy term.
TransportResult w2_entropic(const DensityField& mu, const DensityField& rho, double eps,
                            const EntropicOptions& opts = {});

/// Exact discrete optimum over cell couplings (cells as atoms at their centers),
/// by successive shortest paths. Any grid kind; intended for up to a few hundred cells.
TransportResult w2_exact_lp(const DensityField& mu, const DensityField& rho);

struct TransportOptions {
    RadialModel radial_model = RadialModel::Piecewise;
    double box_eps = 1e-2;
};

/// Sum over species of the squared per-species costs.
double w2_vector(const SpeciesState& a, const SpeciesState& b, const TransportOptions& opts = {});

/// Pushforward of nu under ((1-lambda) x + lambda T), with T from w2_radial(nu, rho),
/// re-binned onto nu's grid by exact cumulative mass.
DensityField displacement_interpolation(const DensityField& nu, const TransportResult& result,
                                        double lambda);

}  // namespace chemoflow
