#include <algorithm>
#include <cmath>
#include <future>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

#include "chemoflow/transport.hpp"

namespace chemoflow {

namespace {

using Gauss = boost::math::quadrature::gauss<double, 20>;

// Integral over [0, len] of f(x), where f is analytic except for branch
// points at distance >= dist to the left of 0. Panels are graded towards 0
// so each panel is no longer than its distance to the nearest branch point.
template <class F>
double graded_integral(F f, double len, double dist)
{
    if (!(len > 0.0)) return 0.0;
    if (dist >= len) return Gauss::integrate(f, 0.0, len);
    double total = 0.0;
    double hi = len;
    const double floor = std::max(dist, 1e-18 * len);
    while (hi > 2.0 * floor) {
        total += Gauss::integrate(f, 0.5 * hi, hi);
        hi *= 0.5;
    }
    return total + Gauss::integrate(f, 0.0, hi);
}

double root_distance(double value, double slope)
{
    if (slope <= 0.0) return value > 0.0 ? INFINITY : 0.0;
    return std::max(value, 0.0) / slope;
}

// (sqrt(a) - sqrt(b))^2 without cancellation.
double sq_root_gap(double a, double b)
{
    a = std::max(a, 0.0);
    b = std::max(b, 0.0);
    const double den = std::sqrt(a) + std::sqrt(b);
    if (den == 0.0) return 0.0;
    const double num = a - b;
    return num * num / (den * den);
}

// 1 - sqrt(b / s) without cancellation.
double one_minus_sqrt_ratio(double s, double b)
{
    b = std::max(b, 0.0);
    if (s <= 0.0) return 0.0;
    return (s - b) / (s + std::sqrt(s * b));
}

void check_masses(const DensityField& mu, const DensityField& rho)
{
    const double ma = mass(mu), mb = mass(rho);
    if (std::abs(ma - mb) > 1e-10 * std::max({std::abs(ma), std::abs(mb), 1e-300})) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "transport needs equal masses, got " << ma << " and " << mb;
        throw std::invalid_argument(msg.str());
    }
}

// Squared radius of the piecewise quantile inside cell j at cumulative mass q.
double s_in_cell(const RadialQuantile& Q, std::size_t j, double q)
{
    const double span = Q.cum[j + 1] - Q.cum[j];
    const double t = span > 0.0 ? (q - Q.cum[j]) / span : 0.0;
    return Q.s[j] + (Q.s[j + 1] - Q.s[j]) * std::clamp(t, 0.0, 1.0);
}

// Walks the merged breakpoints of two quantiles with equal totals and calls
// fn(q0, q1, i, k) on every segment of positive length.
template <class Fn>
void for_each_segment(const RadialQuantile& a, const RadialQuantile& b, Fn fn)
{
    const std::size_t n = a.density.size(), nb = b.density.size();
    const double m = a.total();
    std::size_t i = 0, k = 0;
    double q = 0.0;
    while (q < m) {
        while (i + 1 < n && a.cum[i + 1] <= q) ++i;
        while (k + 1 < nb && b.cum[k + 1] <= q) ++k;
        const double qe = std::min(a.cum[i + 1], b.cum[k + 1]);
        if (!(qe > q)) break;
        fn(q, qe, i, k);
        q = qe;
    }
}

double piecewise_cost(const RadialQuantile& a, const RadialQuantile& b)
{
    double cost = 0.0;
    for_each_segment(a, b, [&](double q0, double q1, std::size_t i, std::size_t k) {
        const double a0 = s_in_cell(a, i, q0), a1 = s_in_cell(a, i, q1);
        const double b0 = s_in_cell(b, k, q0), b1 = s_in_cell(b, k, q1);
        const double len = q1 - q0;
        const double sa = (a1 - a0) / len, sb = (b1 - b0) / len;
        auto f = [&](double x) { return sq_root_gap(a0 + sa * x, b0 + sb * x); };
        cost += graded_integral(f, len, std::min(root_distance(a0, sa), root_distance(b0, sb)));
    });
    return cost;
}

double atomic_cost(const RadialQuantile& a, const RadialQuantile& b)
{
    double cost = 0.0;
    for_each_segment(a, b, [&](double q0, double q1, std::size_t i, std::size_t k) {
        const double d = a.centers[i] - b.centers[k];
        cost += d * d * (q1 - q0);
    });
    return cost;
}

// Potential of transporting a onto b, in s = r^2 on a's cells:
// dpsi/ds = 1 - T(r)/r. Fills cell averages and edge values.
void piecewise_potential(const RadialQuantile& a, const RadialQuantile& b, std::vector<double>& avg,
                         std::vector<double>& edges)
{
    const std::size_t n = a.density.size(), nb = b.density.size();
    avg.assign(n, 0.0);
    edges.assign(n + 1, 0.0);
    std::size_t k = 0;
    for (std::size_t j = 0; j < n; ++j) {
        const double s0 = a.s[j], s1 = a.s[j + 1], ds = s1 - s0;
        double inc = 0.0, weighted = 0.0;
        if (a.cum[j + 1] > a.cum[j]) {
            double q = a.cum[j];
            while (q < a.cum[j + 1]) {
                while (k + 1 < nb && b.cum[k + 1] <= q) ++k;
                const double qe = std::min(a.cum[j + 1], b.cum[k + 1]);
                if (!(qe > q)) break;
                const double sa = s_in_cell(a, j, q);
                const double se = qe >= a.cum[j + 1] ? s1 : s_in_cell(a, j, qe);
                const double len = se - sa;
                if (len > 0.0) {
                    const double ba = s_in_cell(b, k, q), be = s_in_cell(b, k, qe);
                    const double slope = (be - ba) / len;
                    auto g = [&](double x) { return one_minus_sqrt_ratio(sa + x, ba + slope * x); };
                    auto gw = [&](double x) { return (s1 - sa - x) * g(x); };
                    const double dist = std::min(sa, root_distance(ba, slope));
                    inc += graded_integral(g, len, dist);
                    weighted += graded_integral(gw, len, dist);
                }
                q = qe;
            }
        } else if (ds > 0.0) {
            const double rb = b.radius(a.cum[j]);
            const double bval = rb * rb;
            auto g = [&](double x) { return one_minus_sqrt_ratio(s0 + x, bval); };
            auto gw = [&](double x) { return (ds - x) * g(x); };
            inc = graded_integral(g, ds, s0);
            weighted = graded_integral(gw, ds, s0);
        }
        edges[j + 1] = edges[j] + inc;
        avg[j] = ds > 0.0 ? edges[j] + weighted / ds : edges[j];
    }
}

// Dual potentials of the monotone (staircase) coupling between atomic measures.
std::vector<double> atomic_potential(const RadialQuantile& a, const RadialQuantile& b)
{
    const std::size_t n = a.density.size(), nb = b.density.size();
    std::vector<double> u(n, 0.0), v(nb, 0.0);
    std::vector<bool> has_u(n, false), has_v(nb, false);
    auto cost = [&](std::size_t i, std::size_t k) {
        const double d = a.centers[i] - b.centers[k];
        return d * d;
    };
    for_each_segment(a, b, [&](double, double, std::size_t i, std::size_t k) {
        if (!has_u[i] && !has_v[k]) {
            u[i] = 0.0;
            has_u[i] = true;
        }
        if (has_u[i] && !has_v[k]) {
            v[k] = cost(i, k) - u[i];
            has_v[k] = true;
        } else if (!has_u[i]) {
            u[i] = cost(i, k) - v[k];
            has_u[i] = true;
        }
    });
    for (std::size_t i = 0; i < n; ++i) {
        if (has_u[i]) continue;
        double best = INFINITY;
        for (std::size_t k = 0; k < nb; ++k) {
            if (has_v[k]) best = std::min(best, cost(i, k) - v[k]);
        }
        u[i] = std::isfinite(best) ? best : 0.0;
    }
    return u;
}

void normalize_potential(const Grid& g, std::vector<double>& psi, std::vector<double>& edges)
{
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < psi.size(); ++j) {
        num += psi[j] * g.measure(j);
        den += g.measure(j);
    }
    const double c = num / den;
    for (double& p : psi) p -= c;
    for (double& p : edges) p -= c;
}

}  // namespace

RadialQuantile RadialQuantile::from(const DensityField& f, RadialModel model)
{
    const auto& g = f.grid().radial();
    RadialQuantile q;
    q.model = model;
    const std::size_t n = g.size();
    q.cum.assign(n + 1, 0.0);
    q.s.resize(n + 1);
    for (std::size_t e = 0; e <= n; ++e) q.s[e] = g.edge_sq(e);
    q.density.assign(f.values().begin(), f.values().end());
    q.centers = g.centers;
    for (std::size_t j = 0; j < n; ++j) q.cum[j + 1] = q.cum[j] + g.measures[j] * f[j];
    return q;
}

double RadialQuantile::radius(double q) const
{
    if (q <= 0.0) return 0.0;
    auto it = std::lower_bound(cum.begin(), cum.end(), q);
    if (it == cum.end()) --it;
    const auto e = static_cast<std::size_t>(it - cum.begin());
    if (e == 0) return 0.0;
    const std::size_t j = e - 1;
    if (model == RadialModel::Atomic) return centers[j];
    return std::sqrt(s_in_cell(*this, j, std::min(q, cum[e])));
}

TransportResult w2_radial(const DensityField& mu, const DensityField& rho, RadialModel model)
{
    if (!mu.grid().is_radial() || !rho.grid().is_radial()) {
        throw std::invalid_argument("w2_radial needs radial densities");
    }
    mu.validate();
    rho.validate();
    check_masses(mu, rho);

    TransportResult out;
    out.source = RadialQuantile::from(mu, model);
    out.target = RadialQuantile::from(rho, model);
    // remove the admissible rounding-level mass gap so both quantiles end together
    const double m = out.source.total(), mt = out.target.total();
    if (mt > 0.0 && mt != m) {
        for (double& c : out.target.cum) c *= m / mt;
        for (double& d : out.target.density) d *= m / mt;
    }
    out.target.cum.back() = m;
    if (!(m > 0.0)) {
        out.psi.assign(mu.size(), 0.0);
        out.psi_edges.assign(mu.size() + 1, 0.0);
        return out;
    }

    const auto& src = out.source;
    const auto& tgt = out.target;
    if (model == RadialModel::Piecewise) {
        out.cost2 = piecewise_cost(src, tgt);
        piecewise_potential(src, tgt, out.psi, out.psi_edges);
        out.map.resize(src.cum.size());
        for (std::size_t e = 0; e < src.cum.size(); ++e) out.map[e] = tgt.radius(src.cum[e]);
    } else {
        out.cost2 = atomic_cost(src, tgt);
        out.psi = atomic_potential(src, tgt);
        out.map.assign(mu.size(), 0.0);
        for_each_segment(src, tgt, [&](double q0, double q1, std::size_t i, std::size_t k) {
            out.map[i] += tgt.centers[k] * (q1 - q0);
        });
        for (std::size_t i = 0; i < mu.size(); ++i) {
            const double w = src.cum[i + 1] - src.cum[i];
            out.map[i] = w > 0.0 ? out.map[i] / w : src.centers[i];
        }
    }
    normalize_potential(mu.grid(), out.psi, out.psi_edges);
    return out;
}

double w2_vector(const SpeciesState& a, const SpeciesState& b, const TransportOptions& opts)
{
    if (a.species() != b.species()) throw std::invalid_argument("w2_vector: species counts differ");
    auto one = [&](std::size_t i) {
        if (a.grid().is_radial()) return w2_radial(a.field(i), b.field(i), opts.radial_model).cost2;
        return w2_entropic(a.field(i), b.field(i), opts.box_eps).cost2;
    };
    const bool parallel = a.species() > 1 && a.grid().size() >= 256;
    double total = 0.0;
    if (parallel) {
        std::vector<std::future<double>> jobs;
        for (std::size_t i = 0; i < a.species(); ++i) jobs.push_back(std::async(std::launch::async, one, i));
        for (auto& j : jobs) total += j.get();
    } else {
        for (std::size_t i = 0; i < a.species(); ++i) total += one(i);
    }
    return total;
}

DensityField displacement_interpolation(const DensityField& nu, const TransportResult& result, double lambda)
{
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0, 1]");
    if (!nu.grid().is_radial()) throw std::invalid_argument("displacement interpolation needs a radial grid");
    const auto& src = result.source;
    const auto& tgt = result.target;
    if (src.model != RadialModel::Piecewise || src.cum.size() != nu.size() + 1) {
        throw std::invalid_argument("transport result does not belong to this density");
    }
    if (std::abs(src.total() - mass(nu)) > 1e-10 * std::max(1.0, src.total())) {
        throw std::invalid_argument("transport result was computed from a different source mass");
    }
    if (lambda == 0.0) return nu;

    const auto& g = nu.grid().radial();
    const std::size_t n = g.size();
    const double m = src.total();
    auto radius = [&](double q) { return (1.0 - lambda) * src.radius(q) + lambda * tgt.radius(q); };

    std::vector<double> cum(n + 1, 0.0);
    cum[n] = m;
    for (std::size_t e = 1; e < n; ++e) {
        const double r = g.edges[e];
        double lo = cum[e - 1], hi = m;
        if (radius(hi) <= r) {
            cum[e] = m;
            continue;
        }
        for (int it = 0; it < 200 && hi - lo > 1e-17 * m; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (radius(mid) <= r) lo = mid;
            else hi = mid;
        }
        cum[e] = lo;
    }
    std::vector<double> values(n);
    for (std::size_t j = 0; j < n; ++j) values[j] = std::max(cum[j + 1] - cum[j], 0.0) / g.measures[j];
    return DensityField(nu.grid_ptr(), std::move(values));
}

}  // namespace chemoflow
