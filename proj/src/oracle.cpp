#include "chemoflow/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "chemoflow/poisson.hpp"

namespace chemoflow {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct EdgeGeometry {
    std::vector<double> perimeter;  // 2 pi r_e, e = 0..n
    std::vector<double> gap;        // c_e - c_{e-1}, interior edges only
};

EdgeGeometry edge_geometry(const RadialGrid& g)
{
    const std::size_t n = g.size();
    EdgeGeometry eg;
    eg.perimeter.assign(n + 1, 0.0);
    eg.gap.assign(n + 1, 0.0);
    for (std::size_t e = 1; e < n; ++e) {
        eg.perimeter[e] = kTwoPi * g.edges[e];
        eg.gap[e] = g.centers[e] - g.centers[e - 1];
    }
    return eg;
}

// dv/dr at interior edges of the combined potential
std::vector<double> edge_slopes(const SpeciesState& s, const EdgeGeometry& eg)
{
    const std::size_t n = s.grid().size(), N = s.species();
    std::vector<double> src(n, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j < n; ++j) src[j] += s.alphas()[i] * s.field(i)[j];
    }
    const auto V = solve_dirichlet(s.grid_ptr(), src);
    std::vector<double> slope(n + 1, 0.0);
    for (std::size_t e = 1; e < n; ++e) slope[e] = (V.values[e] - V.values[e - 1]) / eg.gap[e];
    return slope;
}

double stable_dt(const SpeciesState& s, const EdgeGeometry& eg, const std::vector<double>& slope, double safety)
{
    const auto& g = s.grid();
    const std::size_t n = g.size();
    double dt = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s.species(); ++i) {
        const double a = s.alphas()[i];
        for (std::size_t j = 0; j < n; ++j) {
            double out = 0.0;
            // inner edge j, outer edge j + 1
            if (j > 0) {
                out += eg.perimeter[j] / eg.gap[j];
                const double u = a * slope[j];
                if (u < 0.0) out += eg.perimeter[j] * (-u);
            }
            if (j + 1 < n) {
                out += eg.perimeter[j + 1] / eg.gap[j + 1];
                const double u = a * slope[j + 1];
                if (u > 0.0) out += eg.perimeter[j + 1] * u;
            }
            if (out > 0.0) dt = std::min(dt, g.measure(j) / out);
        }
    }
    return safety * dt;
}

StepRecord sample_record(std::size_t k, double t, const SpeciesState& s)
{
    StepRecord r;
    r.k = k;
    r.t = t;
    r.masses = s.masses();
    r.linf = linf_norm(s);
    r.min_density = std::numeric_limits<double>::infinity();
    for (const auto& f : s.fields()) {
        r.entropy += entropy(f);
        r.second_moments.push_back(second_moment(f));
        r.min_density = std::min(r.min_density, *std::min_element(f.values().begin(), f.values().end()));
    }
    r.free_energy = free_energy(s);
    r.grad_norm2 = gradient_norm2(s);
    return r;
}

}  // namespace

double reference_stable_dt(const SpeciesState& state, double safety)
{
    if (!state.grid().is_radial()) throw std::invalid_argument("the reference solver is radial only");
    const auto eg = edge_geometry(state.grid().radial());
    return stable_dt(state, eg, edge_slopes(state, eg), safety);
}

Trajectory run_reference(const ReferenceConfig& config, const SpeciesState& initial)
{
    if (!initial.grid().is_radial()) throw std::invalid_argument("the reference solver is radial only");
    if (!(config.T > 0.0) || !(config.sample_dt > 0.0)) throw std::invalid_argument("T and sample_dt must be positive");
    if (!(config.dt_safety > 0.0 && config.dt_safety <= 1.0)) throw std::invalid_argument("dt_safety must lie in (0, 1]");
    if (config.dt < 0.0) throw std::invalid_argument("dt must be nonnegative");
    const std::size_t N = initial.species();
    if (!config.decay_rates.empty() && config.decay_rates.size() != N) {
        throw std::invalid_argument("decay_rates needs one entry per species");
    }
    for (double c : config.decay_rates) {
        if (!(c >= 0.0)) throw std::invalid_argument("decay rates must be nonnegative");
    }
    for (const auto& f : initial.fields()) f.validate();

    const auto& g = initial.grid().radial();
    const std::size_t n = g.size();
    const auto eg = edge_geometry(g);
    const auto& alpha = initial.alphas();

    Trajectory traj;
    traj.config.tau = config.sample_dt;
    traj.config.T = config.T;
    traj.config.keep_states = config.keep_states;
    if (!config.decay_rates.empty()) traj.config.growth = GrowthSpec::death(config.decay_rates);
    traj.admissibility.accepted = true;
    traj.admissibility.reason = "finite-volume reference run";

    const auto samples = static_cast<std::size_t>(std::llround(config.T / config.sample_dt));
    traj.records.push_back(sample_record(0, 0.0, initial));
    if (config.keep_states) traj.states.push_back(initial);

    std::vector<std::vector<double>> cell(N, std::vector<double>(n));
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j < n; ++j) cell[i][j] = initial.field(i)[j] * g.measures[j];
    }
    auto to_state = [&]() {
        std::vector<DensityField> fields;
        for (std::size_t i = 0; i < N; ++i) {
            std::vector<double> d(n);
            for (std::size_t j = 0; j < n; ++j) d[j] = cell[i][j] / g.measures[j];
            fields.emplace_back(initial.grid_ptr(), std::move(d));
        }
        return SpeciesState(std::move(fields), alpha);
    };

    SpeciesState state = initial;
    double t = 0.0;
    std::size_t substeps = 0;
    std::vector<double> flux(n + 1, 0.0);
    for (std::size_t s = 1; s <= samples && traj.failure.empty(); ++s) {
        const double t_next = static_cast<double>(s) * config.sample_dt;
        while (t < t_next) {
            if (++substeps > config.max_steps) {
                traj.failure = "substep limit reached at t = " + std::to_string(t);
                break;
            }
            const auto slope = edge_slopes(state, eg);
            double dt = stable_dt(state, eg, slope, config.dt_safety);
            if (config.dt > 0.0) dt = std::min(dt, config.dt);
            // land exactly on the sample time
            bool last = false;
            if (t + dt >= t_next * (1.0 - 1e-14)) {
                dt = t_next - t;
                last = true;
            }
            for (std::size_t i = 0; i < N; ++i) {
                const auto& rho = state.field(i);
                for (std::size_t e = 1; e < n; ++e) {
                    const double u = alpha[i] * slope[e];
                    const double up = u > 0.0 ? rho[e - 1] : rho[e];
                    flux[e] = eg.perimeter[e] * (u * up - (rho[e] - rho[e - 1]) / eg.gap[e]);
                }
                const double decay = config.decay_rates.empty() ? 1.0 : std::exp(-config.decay_rates[i] * dt);
                for (std::size_t j = 0; j < n; ++j) {
                    cell[i][j] = (cell[i][j] + dt * (flux[j] - flux[j + 1])) * decay;
                    if (!std::isfinite(cell[i][j])) {
                        traj.failure = "non-finite density at substep " + std::to_string(substeps);
                    }
                    // roundoff can leave a tiny negative residue in an emptied cell
                    if (cell[i][j] < 0.0) cell[i][j] = 0.0;
                }
            }
            if (!traj.failure.empty()) break;
            state = to_state();
            t = last ? t_next : t + dt;
        }
        if (!traj.failure.empty()) break;
        traj.records.push_back(sample_record(s, t, state));
        if (config.keep_states) traj.states.push_back(state);
        if (traj.records.back().linf > config.stop_linf) break;
    }
    traj.final_state = state;
    traj.completed = traj.failure.empty();
    return traj;
}

std::optional<double> detect_blowup_numeric(const Trajectory& traj, double threshold)
{
    if (traj.records.empty()) return std::nullopt;
    if (!(threshold > traj.records.front().linf)) {
        throw std::invalid_argument("blow-up threshold must exceed the initial L-infinity norm");
    }
    for (const auto& r : traj.records) {
        if (r.linf > threshold) return r.t;
    }
    return std::nullopt;
}

}  // namespace chemoflow
