#pragma once

#include <span>
#include <vector>

#include "chemoflow/fields.hpp"

namespace chemoflow {

/// Solution of -Δv = f with v = 0 on the boundary, sampled at cell centers.
struct PotentialField {
    GridPtr grid;
    std::vector<double> values;
    /// Radial: dv/dr at centers. Box: dv/dx at centers.
    std::vector<double> grad_x;
    /// Box only: dv/dy at centers.
    std::vector<double> grad_y;
    /// ||K v - W f|| / ||W f|| of the assembled system.
    double relative_residual = 0.0;
};

/// Finite-volume Dirichlet solve. Radial grids use the exact flux
/// recursion of the radial operator (two cumulative sums); box grids
/// use the five-point stencil with a cached sparse factorization.
/// Throws NumericalFailure if the residual exceeds 1e-10 relative.
PotentialField solve_dirichlet(const GridPtr& grid, std::span<const double> source);
PotentialField solve_dirichlet(const DensityField& source);

struct ChemicalPotential {
    PotentialField combined;                  // source sum_j alpha_j rho_j
    std::vector<PotentialField> per_species;  // source rho_i
};

ChemicalPotential chemical_potential(const SpeciesState& state);

/// Discrete <grad v_a, grad v_b> = sum_j w_j rho_a(j) v_b(j); symmetric in (a, b).
double gradient_inner(const DensityField& rho_a, const PotentialField& v_b);

/// sum_j w_j |v_j|.
double l1_norm(const PotentialField& v);

/// Flux resistances of the radial stencil: kappa[e] = (c_e - c_{e-1}) / (2 pi r_e)
/// for interior edges e = 1..n-1, kappa[n] = (1 - c_{n-1}) / (2 pi), kappa[0] = 0.
std::vector<double> radial_edge_resistance(const RadialGrid& grid);

}  // namespace chemoflow
