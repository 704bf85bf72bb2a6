#include "chemoflow/jko.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

#include "chemoflow/errors.hpp"
#include "chemoflow/poisson.hpp"
#include "jko_internal.hpp"

namespace chemoflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double entropy_sum(const SpeciesState& s)
{
    double e = 0.0;
    for (const auto& f : s.fields()) e += entropy(f);
    return e;
}

std::vector<double> gradient_norms(const SpeciesState& state)
{
    const auto& g = state.grid();
    std::vector<double> out(state.species(), 0.0);
    for (std::size_t i = 0; i < state.species(); ++i) {
        const auto& f = state.field(i);
        double s = 0.0;
        if (g.is_radial()) {
            const auto& r = g.radial();
            for (std::size_t e = 1; e < r.size(); ++e) {
                const double d = f[e] - f[e - 1];
                s += d * d * 2.0 * std::numbers::pi * r.edges[e] / (r.centers[e] - r.centers[e - 1]);
            }
        } else {
            const auto& b = g.box();
            for (std::size_t iy = 0; iy < b.ny; ++iy) {
                for (std::size_t ix = 0; ix < b.nx; ++ix) {
                    const double c = f[b.index(ix, iy)];
                    if (ix + 1 < b.nx) {
                        const double d = f[b.index(ix + 1, iy)] - c;
                        s += d * d * b.hy / b.hx;
                    }
                    if (iy + 1 < b.ny) {
                        const double d = f[b.index(ix, iy + 1)] - c;
                        s += d * d * b.hx / b.hy;
                    }
                }
            }
        }
        out[i] = s;
    }
    return out;
}

double inverse_linf(const SpeciesState& s)
{
    const double l = linf_norm(s);
    return l > 0.0 ? 1.0 / l : kInf;
}

// Slack of the L-infinity recursion at step k.
double recursion_slack(const SchemeConfig& cfg, double chi_val, double inv0, double inv_k, std::size_t k)
{
    const double kd = static_cast<double>(k);
    const double tau = cfg.tau;
    const double drift = cfg.lambda * chi_val * tau * kd;
    if (cfg.growth.is_birth()) {
        const double C = cfg.growth.upper_rate();
        return inv_k - (std::pow(1.0 + C * tau, -kd) * inv0 - drift);
    }
    if (cfg.growth.is_death()) {
        const double c = cfg.growth.lower_rate();
        return inv_k - std::pow(1.0 - c * tau, -kd) * (inv0 - drift);
    }
    return inv_k - (inv0 - drift);
}

}  // namespace

double chi(std::span<const double> alphas)
{
    if (alphas.empty()) throw std::invalid_argument("chi needs at least one sensitivity");
    double mx = 0.0, sum = 0.0;
    for (double a : alphas) {
        if (!(a >= 0.0) || !std::isfinite(a)) throw std::invalid_argument("sensitivities must be nonnegative");
        mx = std::max(mx, a);
        sum += a;
    }
    return mx * sum;
}

double free_energy(const SpeciesState& state)
{
    const auto pot = chemical_potential(state).combined;
    double interaction = 0.0;
    for (std::size_t i = 0; i < state.species(); ++i) {
        if (state.alphas()[i] != 0.0) interaction += 0.5 * state.alphas()[i] * gradient_inner(state.field(i), pot);
    }
    return entropy_sum(state) - interaction;
}

double phi(double tau, const SpeciesState& predictor, const SpeciesState& candidate, const TransportOptions& transport)
{
    if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
    return free_energy(candidate) + w2_vector(predictor, candidate, transport) / (2.0 * tau);
}

std::vector<double> euler_lagrange_residual(double tau, const SpeciesState& predictor, const SpeciesState& candidate,
                                            double box_eps)
{
    const auto V = chemical_potential(candidate).combined;
    std::vector<double> out(candidate.species());
    for (std::size_t i = 0; i < candidate.species(); ++i) {
        const auto psi = candidate.grid().is_radial()
                             ? w2_radial(candidate.field(i), predictor.field(i)).psi
                             : w2_entropic(candidate.field(i), predictor.field(i), box_eps).psi;
        double lo = kInf, hi = -kInf;
        for (std::size_t j = 0; j < psi.size(); ++j) {
            const double G = std::log(candidate.field(i)[j]) - candidate.alphas()[i] * V.values[j] + psi[j] / (2.0 * tau);
            lo = std::min(lo, G);
            hi = std::max(hi, G);
        }
        out[i] = std::isfinite(lo) && std::isfinite(hi) ? 0.5 * (hi - lo) : kInf;
    }
    return out;
}

StepResult jko_step_detailed(double tau, const SpeciesState& predictor, double chi_val, const StepOptions& opts)
{
    if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("tau must be positive");
    auto result = predictor.grid().is_radial() ? detail::jko_step_radial(tau, predictor, chi_val, opts)
                                               : detail::jko_step_box(tau, predictor, chi_val, opts);
    result.diag.phi_at_predictor = free_energy(predictor);
    return result;
}

SpeciesState jko_step(double tau, const SpeciesState& predictor, double chi_val, const StepOptions& opts)
{
    return jko_step_detailed(tau, predictor, chi_val, opts).state;
}

AdmissibilityReport admissibility(const SchemeConfig& config, const SpeciesState& initial)
{
    if (!(config.lambda > 1.0)) throw std::invalid_argument("lambda must exceed 1");
    AdmissibilityReport rep;
    rep.chi = chi(initial.alphas());
    const double inv0 = inverse_linf(initial);
    const double lam = config.lambda, T = config.T, tau = config.tau;
    rep.k0 = rep.chi > 0.0 ? 4.0 * (lam - 1.0) / (rep.chi * (2.0 * lam - 1.0)) : kInf;
    if (rep.chi == 0.0) {
        rep.eps0 = inv0;
        rep.max_horizon = kInf;
        rep.tau_limit = kInf;
        rep.accepted = true;
        return rep;
    }

    std::ostringstream why;
    if (config.growth.is_birth()) {
        const double C = config.growth.upper_rate();
        rep.eps0 = std::exp(-C * T) * inv0 - lam * rep.chi * T;
        double lo = 0.0, hi = inv0 / (lam * rep.chi);
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (std::exp(-C * mid) * inv0 - lam * rep.chi * mid > 0.0 ? lo : hi) = mid;
        }
        rep.max_horizon = lo;
        const double budget = rep.k0 * std::max(rep.eps0, 0.0);
        rep.tau_limit = C > 0.0 ? (std::sqrt(1.0 + 4.0 * C * budget) - 1.0) / (2.0 * C) : budget;
        if (!(rep.chi * T * std::exp(C * T) < inv0)) why << "horizon violates chi T e^{CT} < 1/||rho0||; ";
        if (!(rep.eps0 > 0.0)) why << "no positive slack eps0 for this horizon; ";
        else if (!(tau * (1.0 + C * tau) <= budget)) why << "tau(1 + C tau) exceeds k0 eps0; ";
    } else {
        rep.eps0 = inv0 - lam * rep.chi * T;
        rep.max_horizon = inv0 / (lam * rep.chi);
        rep.tau_limit = rep.k0 * std::max(rep.eps0, 0.0);
        if (!(rep.chi * T < inv0)) why << "horizon violates chi T < 1/||rho0||; ";
        if (!(rep.eps0 > 0.0)) why << "no positive slack eps0 for this horizon; ";
        else if (!(tau <= rep.tau_limit)) why << "tau exceeds k0 eps0; ";
    }
    rep.reason = why.str();
    if (!rep.reason.empty()) rep.reason.resize(rep.reason.size() - 2);
    rep.accepted = rep.reason.empty();
    return rep;
}

const SpeciesState& Trajectory::state_at(double t) const
{
    if (states.empty()) return final_state;
    const double k = std::ceil(t / config.tau - 1e-9);
    const auto idx = static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(states.size() - 1)));
    return states[idx];
}

double gradient_norm2(const SpeciesState& state)
{
    const auto g = gradient_norms(state);
    return *std::max_element(g.begin(), g.end());
}

Trajectory run_scheme(const SchemeConfig& config, const SpeciesState& initial)
{
    if (!(config.tau > 0.0) || !(config.T > 0.0)) throw std::invalid_argument("tau and T must be positive");
    config.growth.validate(initial.species());
    Trajectory traj;
    traj.config = config;
    traj.admissibility = admissibility(config, initial);
    if (!traj.admissibility.accepted && !config.override_admissibility) {
        throw std::invalid_argument("scheme parameters are not admissible: " + traj.admissibility.reason);
    }
    const double chi_val = traj.admissibility.chi;
    const double tau = config.tau;
    const auto K = static_cast<std::size_t>(std::floor(config.T / tau + 1e-9));
    const double inv0 = inverse_linf(initial);

    auto base_record = [&](std::size_t k, const SpeciesState& s) {
        StepRecord r;
        r.k = k;
        r.t = static_cast<double>(k) * tau;
        r.masses = s.masses();
        r.linf = linf_norm(s);
        r.entropy = entropy_sum(s);
        r.min_density = kInf;
        for (const auto& f : s.fields()) {
            r.second_moments.push_back(second_moment(f));
            r.min_density = std::min(r.min_density, *std::min_element(f.values().begin(), f.values().end()));
        }
        r.bound_slack = recursion_slack(config, chi_val, inv0, inverse_linf(s), k);
        r.grad_norm2 = gradient_norm2(s);
        return r;
    };

    StepRecord first = base_record(0, initial);
    first.free_energy = free_energy(initial);
    traj.records.push_back(first);
    if (config.keep_states) traj.states.push_back(initial);

    SpeciesState state = initial;
    for (std::size_t k = 0; k < K; ++k) {
        try {
            auto grown = apply_growth(state, config.growth, tau);
            const SpeciesState& nu = grown.predictor;
            auto step = jko_step_detailed(tau, nu, chi_val, config.step);
            StepRecord r = base_record(k + 1, step.state);
            r.free_energy = step.diag.free_energy;
            r.phi_decrease = step.diag.phi_at_predictor - step.diag.phi_value;
            r.w2_increment = step.diag.w2;
            r.el_residual = step.diag.el_residual;
            r.step_slack = inverse_linf(step.state) - (inverse_linf(nu) - config.lambda * chi_val * tau);
            r.cap_binding = step.diag.cap_binding;
            r.iterations = step.diag.iterations;
            const auto gn = gradient_norms(step.state);
            for (std::size_t i = 0; i < gn.size(); ++i) {
                const double w2 = step.diag.w2_per_species[i];
                traj.c_T = std::max(traj.c_T, gn[i] / (w2 / (tau * tau) + 1.0));
            }
            traj.sum_w2 += step.diag.w2;
            traj.records.push_back(std::move(r));
            if (config.keep_states) {
                traj.predictors.push_back(nu);
                traj.states.push_back(step.state);
            }
            state = std::move(step.state);
        } catch (const StepRejected& e) {
            traj.failure = "step " + std::to_string(k + 1) + ": " + e.what();
            break;
        } catch (const NumericalFailure& e) {
            traj.failure = "step " + std::to_string(k + 1) + ": " + e.what();
            break;
        }
    }
    traj.final_state = state;
    traj.completed = traj.failure.empty();
    traj.c_bar = traj.sum_w2 / tau;
    return traj;
}

double weak_form_residual(const Trajectory& traj)
{
    if (traj.states.size() < 2 || traj.predictors.size() + 1 != traj.states.size()) {
        throw std::invalid_argument("weak-form residual needs a trajectory with stored states");
    }
    const auto& grid = traj.states.front().grid();
    const auto& g = grid.radial();
    const std::size_t n = g.size();
    const double T = traj.config.T, tau = traj.config.tau;
    const double pi = std::numbers::pi;
    using Gauss = boost::math::quadrature::gauss<double, 20>;

    auto zeta = [](double r) { return std::pow(1.0 - r * r, 3); };
    auto dzeta = [](double r) { return -6.0 * r * std::pow(1.0 - r * r, 2); };
    auto eta = [&](double t) {
        const double s = std::sin(pi * t / T);
        return s * s;
    };

    // per-cell integrals of zeta and of the Laplacian of zeta
    std::vector<double> zeta_cell(n), lap_cell(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double a = g.edges[j], b = g.edges[j + 1];
        zeta_cell[j] = Gauss::integrate([&](double r) { return zeta(r) * 2.0 * pi * r; }, a, b);
        lap_cell[j] = 2.0 * pi * (b * dzeta(b) - a * dzeta(a));
    }

    const std::size_t N = traj.states.front().species();
    std::vector<double> total(N, 0.0);
    const double gp = 0.5 / std::sqrt(3.0);
    for (std::size_t k = 0; k + 1 < traj.states.size(); ++k) {
        const auto& next = traj.states[k + 1];
        const auto& nu = traj.predictors[k];
        const double t0 = static_cast<double>(k) * tau;
        const double eta_bar = 0.5 * (eta(t0 + (0.5 - gp) * tau) + eta(t0 + (0.5 + gp) * tau));

        // combined source and its cumulative mass at the inner edge of each cell
        std::vector<double> src(n, 0.0), inner(n + 1, 0.0);
        for (std::size_t i = 0; i < N; ++i) {
            for (std::size_t j = 0; j < n; ++j) src[j] += next.alphas()[i] * next.field(i)[j];
        }
        for (std::size_t j = 0; j < n; ++j) inner[j + 1] = inner[j] + src[j] * g.measures[j];
        std::vector<double> drift(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double a = g.edges[j], b = g.edges[j + 1];
            // -V'(r) 2 pi r = inner mass within r
            drift[j] = Gauss::integrate(
                [&](double r) { return -(inner[j] + pi * src[j] * (r * r - a * a)) * dzeta(r); }, a, b);
        }

        for (std::size_t i = 0; i < N; ++i) {
            double change = 0.0, diffusion = 0.0, chemo = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double rho = next.field(i)[j];
                change += (rho - nu.field(i)[j]) * zeta_cell[j];
                diffusion += rho * lap_cell[j];
                chemo += rho * drift[j];
            }
            total[i] += eta_bar * (change - tau * (diffusion + next.alphas()[i] * chemo));
        }
    }
    double r = 0.0;
    for (double x : total) r += std::abs(x);
    return r;
}

}  // namespace chemoflow
