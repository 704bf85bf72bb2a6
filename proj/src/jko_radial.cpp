#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "chemoflow/errors.hpp"
#include "chemoflow/poisson.hpp"
#include "jko_internal.hpp"

namespace chemoflow::detail {

namespace {

using CellMasses = std::vector<std::vector<double>>;

// Everything the Newton iteration needs at one iterate.
struct Evaluation {
    double phi = 0.0;
    double energy = 0.0;
    std::vector<double> w2;
    CellMasses G;                 // log d + 1 - alpha V + g / (2 tau)
    std::vector<std::vector<double>> g;  // cell-averaged potentials
    double residual = 0.0;
    std::vector<double> per_species;
};

class RadialProblem {
public:
    RadialProblem(double tau, const SpeciesState& nu)
        : tau_(tau), nu_(nu), grid_(nu.grid_ptr()), n_(nu.grid().size()), N_(nu.species()),
          w_(nu.grid().radial().measures), kappa_(radial_edge_resistance(nu.grid().radial()))
    {
    }

    std::size_t cells() const { return n_; }
    std::size_t species() const { return N_; }
    const std::vector<double>& measures() const { return w_; }
    const std::vector<double>& kappa() const { return kappa_; }

    DensityField field(const std::vector<double>& L) const
    {
        std::vector<double> d(n_);
        for (std::size_t j = 0; j < n_; ++j) d[j] = L[j] / w_[j];
        return DensityField(grid_, std::move(d));
    }

    std::vector<double> potential(std::size_t i, const std::vector<double>& L, double* cost) const
    {
        auto r = w2_radial(field(L), nu_.field(i));
        if (cost) *cost = r.cost2;
        return std::move(r.psi);
    }

    Evaluation evaluate(const CellMasses& L) const
    {
        Evaluation ev;
        const auto& alpha = nu_.alphas();
        // combined cumulative source A_e = sum_i alpha_i Q_ie
        std::vector<double> A(n_ + 1, 0.0);
        double entropy = 0.0;
        for (std::size_t i = 0; i < N_; ++i) {
            double q = 0.0;
            for (std::size_t j = 0; j < n_; ++j) {
                q += L[i][j];
                A[j + 1] += alpha[i] * q;
                entropy += L[i][j] * std::log(L[i][j] / w_[j]);
            }
        }
        double interaction = 0.0;
        for (std::size_t e = 1; e <= n_; ++e) interaction += 0.5 * kappa_[e] * A[e] * A[e];
        std::vector<double> V(n_, 0.0);
        V[n_ - 1] = kappa_[n_] * A[n_];
        for (std::size_t j = n_ - 1; j-- > 0;) V[j] = V[j + 1] + kappa_[j + 1] * A[j + 1];

        ev.w2.assign(N_, 0.0);
        ev.G.assign(N_, std::vector<double>(n_));
        ev.g.resize(N_);
        ev.per_species.assign(N_, 0.0);
        double penalty = 0.0;
        for (std::size_t i = 0; i < N_; ++i) {
            ev.g[i] = potential(i, L[i], &ev.w2[i]);
            penalty += ev.w2[i] / (2.0 * tau_);
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (std::size_t j = 0; j < n_; ++j) {
                const double G = std::log(L[i][j] / w_[j]) + 1.0 - alpha[i] * V[j] + ev.g[i][j] / (2.0 * tau_);
                ev.G[i][j] = G;
                lo = std::min(lo, G);
                hi = std::max(hi, G);
            }
            ev.per_species[i] = 0.5 * (hi - lo);
            ev.residual = std::max(ev.residual, ev.per_species[i]);
        }
        ev.energy = entropy - interaction;
        ev.phi = ev.energy + penalty;
        return ev;
    }

private:
    double tau_;
    const SpeciesState& nu_;
    GridPtr grid_;
    std::size_t n_, N_;
    std::vector<double> w_;
    std::vector<double> kappa_;
};

}  // namespace

std::vector<std::vector<double>> initial_cell_masses(const SpeciesState& predictor, double cap)
{
    const auto& g = predictor.grid();
    const std::size_t n = g.size();
    const double area = g.total_measure();
    CellMasses L(predictor.species(), std::vector<double>(n));
    for (std::size_t i = 0; i < predictor.species(); ++i) {
        const auto& f = predictor.field(i);
        const double m = predictor.masses()[i];
        if (!(m > 0.0)) throw std::invalid_argument("predictor masses must be positive");
        const double uniform = m / area;
        if (uniform > cap) {
            throw StepRejected("density cap 1/(chi tau) is below the mean density of species " +
                               std::to_string(i + 1));
        }
        const bool positive = *std::min_element(f.values().begin(), f.values().end()) > 0.0;
        const bool capped = max_value(f) <= cap;
        const double blend = positive && capped ? 0.0 : (capped ? 0.1 : 1.0);
        for (std::size_t j = 0; j < n; ++j) {
            L[i][j] = g.measure(j) * ((1.0 - blend) * f[j] + blend * uniform);
        }
    }
    return L;
}

StepResult jko_step_radial(double tau, const SpeciesState& predictor, double chi_val, const StepOptions& opts)
{
    const double cap = chi_val > 0.0 ? 1.0 / (chi_val * tau) : std::numeric_limits<double>::infinity();
    RadialProblem prob(tau, predictor);
    const std::size_t n = prob.cells(), N = prob.species(), ne = n - 1;
    const auto& w = prob.measures();
    const auto& kappa = prob.kappa();
    const auto& alpha = predictor.alphas();

    CellMasses L = initial_cell_masses(predictor, cap);
    Evaluation ev = prob.evaluate(L);
    StepDiagnostics diag;
    diag.residual_history.push_back(ev.residual);

    auto at_cap = [&](const CellMasses& M) {
        for (std::size_t i = 0; i < N; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (M[i][j] / w[j] >= cap * (1.0 - 1e-9)) return true;
            }
        }
        return false;
    };

    std::size_t it = 0;
    const std::size_t dim = N * ne;
    while (ne > 0 && ev.residual > opts.el_tol && it < opts.max_iterations) {
        ++it;
        // gradient in cumulative-mass coordinates
        Eigen::VectorXd grad(static_cast<Eigen::Index>(dim));
        for (std::size_t i = 0; i < N; ++i) {
            for (std::size_t e = 1; e <= ne; ++e) {
                grad[static_cast<Eigen::Index>(i * ne + e - 1)] = ev.G[i][e - 1] - ev.G[i][e];
            }
        }

        std::vector<Eigen::Triplet<double>> trips;
        auto add = [&](std::size_t r, std::size_t c, double v) {
            trips.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
        };
        for (std::size_t i = 0; i < N; ++i) {
            const std::size_t base = i * ne;
            for (std::size_t e = 1; e <= ne; ++e) {
                add(base + e - 1, base + e - 1, 1.0 / L[i][e - 1] + 1.0 / L[i][e]);
                if (e < ne) {
                    add(base + e - 1, base + e, -1.0 / L[i][e]);
                    add(base + e, base + e - 1, -1.0 / L[i][e]);
                }
            }
            for (std::size_t k = 0; k < N; ++k) {
                for (std::size_t e = 1; e <= ne; ++e) {
                    add(i * ne + e - 1, k * ne + e - 1, -alpha[i] * alpha[k] * kappa[e]);
                }
            }
            // transport part: tridiagonal, three colors of finite differences
            for (std::size_t color = 0; color < 3; ++color) {
                std::vector<double> Lp = L[i];
                std::vector<double> h(n + 1, 0.0);
                bool any = false;
                for (std::size_t e = 1 + color; e <= ne; e += 3) {
                    h[e] = 1e-6 * std::min(L[i][e - 1], L[i][e]);
                    Lp[e - 1] += h[e];
                    Lp[e] -= h[e];
                    any = true;
                }
                if (!any) continue;
                const auto gp = prob.potential(i, Lp, nullptr);
                for (std::size_t e = 1 + color; e <= ne; e += 3) {
                    for (std::size_t r = std::max<std::size_t>(e, 2) - 1; r <= std::min(e + 1, ne); ++r) {
                        const double d_new = gp[r - 1] - gp[r];
                        const double d_old = ev.g[i][r - 1] - ev.g[i][r];
                        const double v = 0.5 * (d_new - d_old) / (2.0 * tau * h[e]);
                        add(base + r - 1, base + e - 1, v);
                        add(base + e - 1, base + r - 1, v);
                    }
                }
            }
        }
        Eigen::SparseMatrix<double> H(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        H.setFromTriplets(trips.begin(), trips.end());

        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
        Eigen::VectorXd step;
        double shift = 0.0;
        double diag_scale = 0.0;
        for (Eigen::Index k = 0; k < H.outerSize(); ++k) diag_scale = std::max(diag_scale, std::abs(H.coeff(k, k)));
        for (int attempt = 0; attempt < 60; ++attempt) {
            Eigen::SparseMatrix<double> Hs = H;
            if (shift > 0.0) {
                for (Eigen::Index k = 0; k < Hs.outerSize(); ++k) Hs.coeffRef(k, k) += shift;
            }
            solver.compute(Hs);
            if (solver.info() == Eigen::Success && solver.vectorD().minCoeff() > 0.0) {
                step = solver.solve(-grad);
                if (step.allFinite()) break;
            }
            shift = shift == 0.0 ? 1e-10 * diag_scale : 4.0 * shift;
            step.resize(0);
        }
        if (step.size() == 0) {
            throw StepRejected("Newton system could not be regularized", diag.residual_history);
        }

        // step in cell masses
        CellMasses dL(N, std::vector<double>(n));
        for (std::size_t i = 0; i < N; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                const double hi = j + 1 <= ne ? step[static_cast<Eigen::Index>(i * ne + j)] : 0.0;
                const double lo = j >= 1 ? step[static_cast<Eigen::Index>(i * ne + j - 1)] : 0.0;
                dL[i][j] = hi - lo;
            }
        }
        double t = 1.0;
        for (std::size_t i = 0; i < N; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (dL[i][j] < 0.0) t = std::min(t, -0.95 * L[i][j] / dL[i][j]);
                if (dL[i][j] > 0.0 && std::isfinite(cap)) {
                    t = std::min(t, std::max(0.0, (cap * w[j] - L[i][j]) / dL[i][j]));
                }
            }
        }
        const double slope = grad.dot(step);
        bool accepted = false;
        for (int ls = 0; ls < 60 && t > 1e-16; ++ls, t *= 0.5) {
            CellMasses trial = L;
            for (std::size_t i = 0; i < N; ++i) {
                for (std::size_t j = 0; j < n; ++j) trial[i][j] += t * dL[i][j];
            }
            bool ok = true;
            for (const auto& row : trial) {
                for (double v : row) ok = ok && v > 0.0;
            }
            if (!ok) continue;
            Evaluation trial_ev = prob.evaluate(trial);
            const bool armijo = trial_ev.phi <= ev.phi + 1e-4 * t * slope;
            // near the optimum Phi differences fall below rounding; fall back on the residual
            const bool residual_drop = ev.residual < 1e-5 && trial_ev.residual < ev.residual;
            if (armijo || residual_drop) {
                L = std::move(trial);
                ev = std::move(trial_ev);
                accepted = true;
                break;
            }
        }
        diag.residual_history.push_back(ev.residual);
        if (!accepted) break;
    }

    if (!(ev.residual <= opts.el_accept)) {
        std::ostringstream msg;
        msg << "JKO step did not converge: optimality residual " << ev.residual << " after " << it
            << " Newton iterations";
        throw StepRejected(msg.str(), diag.residual_history);
    }

    std::vector<DensityField> fields;
    for (std::size_t i = 0; i < N; ++i) fields.push_back(prob.field(L[i]));
    SpeciesState out(std::move(fields), predictor.alphas());
    for (std::size_t i = 0; i < N; ++i) out.renormalize(i, predictor.masses()[i]);

    diag.iterations = it;
    diag.el_residual = ev.residual;
    diag.el_per_species = ev.per_species;
    diag.free_energy = ev.energy;
    diag.phi_value = ev.phi;
    diag.w2_per_species = ev.w2;
    for (double x : ev.w2) diag.w2 += x;
    diag.cap_binding = at_cap(L);
    return {std::move(out), std::move(diag)};
}

}  // namespace chemoflow::detail
