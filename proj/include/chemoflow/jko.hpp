#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "chemoflow/fields.hpp"
#include "chemoflow/transport.hpp"

namespace chemoflow {

/// max_i alpha_i * sum_j alpha_j. Throws on an empty list or a negative entry.
double chi(std::span<const double> alphas);

/// Sum of entropies minus (1/2) sum_ij alpha_i alpha_j <grad v_i, grad v_j>.
double free_energy(const SpeciesState& state);

/// free_energy(candidate) + w2_vector(predictor, candidate) / (2 tau).
double phi(double tau, const SpeciesState& predictor, const SpeciesState& candidate,
           const TransportOptions& transport = {});

struct StepOptions {
    double el_tol = 1e-10;          // Newton target for the optimality residual
    double el_accept = 1e-8;        // residual still accepted if Newton stalls above el_tol
    std::size_t max_iterations = 200;
    double box_eps = 1e-2;          // entropic regularization on box grids
    double box_damping = 0.5;       // initial damping of the box fixed-point update
    std::size_t box_max_iterations = 5000;
};

struct StepDiagnostics {
    double el_residual = 0.0;               // max over species
    std::vector<double> el_per_species;
    std::size_t iterations = 0;
    std::vector<double> residual_history;
    double free_energy = 0.0;               // of the new state
    double phi_value = 0.0;                 // Phi at the new state
    double phi_at_predictor = 0.0;          // Phi at the predictor, equal to F(predictor)
    std::vector<double> w2_per_species;     // W2^2(predictor_i, new_i)
    double w2 = 0.0;
    bool cap_binding = false;               // density cap 1/(chi tau) active at exit
};

struct StepResult {
    SpeciesState state;
    StepDiagnostics diag;
};

/// One minimizing-movement step: argmin over states with the predictor's masses
/// and densities <= 1/(chi tau) of Phi(tau, predictor; .). Radial grids use a
/// Newton method in cumulative-mass coordinates, box grids a damped fixed point
/// on the logarithmic optimality condition with entropic potentials.
/// Throws StepRejected with the residual history when it does not converge.
StepResult jko_step_detailed(double tau, const SpeciesState& predictor, double chi_val,
                             const StepOptions& opts = {});
SpeciesState jko_step(double tau, const SpeciesState& predictor, double chi_val,
                      const StepOptions& opts = {});

/// Per-species spread (max - min)/2 over cells of
/// log rho_i - alpha_i V + psi_i / (2 tau), psi_i transporting rho_i onto nu_i.
std::vector<double> euler_lagrange_residual(double tau, const SpeciesState& predictor,
                                            const SpeciesState& candidate, double box_eps = 1e-2);

struct SchemeConfig {
    double tau = 1e-2;
    double T = 0.1;
    double lambda = 2.0;
    GrowthSpec growth;
    StepOptions step;
    bool override_admissibility = false;
    bool keep_states = true;  // store every state in the trajectory
};

struct AdmissibilityReport {
    double chi = 0.0;
    double k0 = 0.0;
    double eps0 = 0.0;         // largest slack allowed by the horizon inequality
    double max_horizon = 0.0;  // sup of T for which eps0 > 0
    double tau_limit = 0.0;    // largest tau allowed for the given T
    bool accepted = false;
    std::string reason;
};

/// k0 = 4(lambda-1)/(chi(2lambda-1)). Birth: chi T e^{CT} < 1/||rho0||, eps0 =
/// e^{-CT}/||rho0|| - lambda chi T, tau(1+C tau) <= k0 eps0. Death and conservative:
/// chi T < 1/||rho0||, eps0 = 1/||rho0|| - lambda chi T, tau <= k0 eps0.
AdmissibilityReport admissibility(const SchemeConfig& config, const SpeciesState& initial);

struct StepRecord {
    std::size_t k = 0;
    double t = 0.0;
    std::vector<double> masses;
    double linf = 0.0;
    double entropy = 0.0;
    double free_energy = 0.0;
    double phi_decrease = 0.0;   // F(nu) - Phi(rho^{k}) for k >= 1
    double w2_increment = 0.0;   // sum_i W2^2(nu_i^{k-1}, rho_i^{k})
    double el_residual = 0.0;
    std::vector<double> second_moments;
    double bound_slack = 0.0;    // slack in the L-infinity recursion
    double step_slack = 0.0;    // 1/||rho^k|| - (1/||nu^{k-1}|| - lambda chi tau)
    double grad_norm2 = 0.0;     // max_i ||grad rho_i||^2
    double min_density = 0.0;
    bool cap_binding = false;
    std::size_t iterations = 0;
};

struct Trajectory {
    SchemeConfig config;
    AdmissibilityReport admissibility;
    std::vector<StepRecord> records;        // k = 0 .. K
    std::vector<SpeciesState> states;       // k = 0 .. K when keep_states
    std::vector<SpeciesState> predictors;   // nu^k, k = 0 .. K-1 when keep_states
    SpeciesState final_state;
    double sum_w2 = 0.0;
    double c_bar = 0.0;                     // sum_w2 / tau
    double c_T = 0.0;                       // max ||grad rho||^2 / (W2^2/tau^2 + 1)
    bool completed = false;
    std::string failure;

    /// Piecewise-constant curve: the state on ((k-1) tau, k tau].
    const SpeciesState& state_at(double t) const;
};

/// Runs floor(T/tau) steps. Throws std::invalid_argument if the configuration is
/// not admissible and not overridden. A failing step ends the run early with
/// `failure` set and the partial trajectory kept.
Trajectory run_scheme(const SchemeConfig& config, const SpeciesState& initial);

/// max over species of the discrete squared L2 norm of the radial gradient.
double gradient_norm2(const SpeciesState& state);

/// Residual of the discrete weak form with test function
/// xi(t, r) = sin^2(pi t / T) (1 - r^2)^3, summed in absolute value over species.
/// Radial trajectories with stored states only.
double weak_form_residual(const Trajectory& traj);

}  // namespace chemoflow
