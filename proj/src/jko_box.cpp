#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "chemoflow/errors.hpp"
#include "chemoflow/poisson.hpp"
#include "jko_internal.hpp"

namespace chemoflow::detail {

StepResult jko_step_box(double tau, const SpeciesState& predictor, double chi_val, const StepOptions& opts)
{
    const double cap = chi_val > 0.0 ? 1.0 / (chi_val * tau) : std::numeric_limits<double>::infinity();
    const auto& grid = predictor.grid();
    const std::size_t n = grid.size(), N = predictor.species();
    const auto& alpha = predictor.alphas();

    auto cells = initial_cell_masses(predictor, cap);
    std::vector<std::vector<double>> logd(N, std::vector<double>(n));
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j < n; ++j) logd[i][j] = std::log(cells[i][j] / grid.measure(j));
    }
    auto make_state = [&]() {
        std::vector<DensityField> fields;
        for (std::size_t i = 0; i < N; ++i) {
            std::vector<double> d(n);
            for (std::size_t j = 0; j < n; ++j) d[j] = std::exp(logd[i][j]);
            fields.emplace_back(predictor.grid_ptr(), std::move(d));
        }
        SpeciesState s(std::move(fields), alpha);
        for (std::size_t i = 0; i < N; ++i) s.renormalize(i, predictor.masses()[i]);
        return s;
    };

    StepDiagnostics diag;
    double damping = opts.box_damping;
    double prev = std::numeric_limits<double>::infinity();
    SpeciesState state = make_state();
    std::vector<double> per_species(N, 0.0), w2(N, 0.0);
    std::size_t it = 0;
    double residual = 0.0;
    for (; it < opts.box_max_iterations; ++it) {
        const auto V = chemical_potential(state).combined;
        std::vector<std::vector<double>> target(N, std::vector<double>(n));
        residual = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const auto tr = w2_entropic(state.field(i), predictor.field(i), opts.box_eps);
            w2[i] = tr.cost2;
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (std::size_t j = 0; j < n; ++j) {
                const double ld = std::log(state.field(i)[j]);
                target[i][j] = alpha[i] * V.values[j] - tr.psi[j] / (2.0 * tau);
                const double G = ld - target[i][j];
                lo = std::min(lo, G);
                hi = std::max(hi, G);
                logd[i][j] = ld;
            }
            per_species[i] = 0.5 * (hi - lo);
            residual = std::max(residual, per_species[i]);
        }
        diag.residual_history.push_back(residual);
        if (residual <= opts.el_tol) break;
        if (residual > prev) damping = std::max(0.5 * damping, 1e-6);
        prev = residual;
        for (std::size_t i = 0; i < N; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                logd[i][j] = (1.0 - damping) * logd[i][j] + damping * target[i][j];
            }
            // shift so that the exponentials stay in range before renormalizing
            const double mx = *std::max_element(logd[i].begin(), logd[i].end());
            for (double& v : logd[i]) v -= mx;
        }
        state = make_state();
    }

    if (!(residual <= opts.el_accept)) {
        std::ostringstream msg;
        msg << "box JKO step did not converge: optimality residual " << residual << " after " << it
            << " iterations";
        throw StepRejected(msg.str(), diag.residual_history);
    }

    diag.iterations = it;
    diag.el_residual = residual;
    diag.el_per_species = per_species;
    diag.w2_per_species = w2;
    for (double x : w2) diag.w2 += x;
    double entropy_sum = 0.0;
    for (const auto& f : state.fields()) entropy_sum += entropy(f);
    const auto pot = chemical_potential(state).combined;
    double interaction = 0.0;
    for (std::size_t i = 0; i < N; ++i) interaction += 0.5 * alpha[i] * gradient_inner(state.field(i), pot);
    diag.free_energy = entropy_sum - interaction;
    diag.phi_value = diag.free_energy + diag.w2 / (2.0 * tau);
    diag.cap_binding = linf_norm(state) >= cap * (1.0 - 1e-9);
    return {std::move(state), std::move(diag)};
}

}  // namespace chemoflow::detail
