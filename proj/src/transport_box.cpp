#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "chemoflow/errors.hpp"
#include "chemoflow/transport.hpp"

namespace chemoflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> cell_masses(const DensityField& f)
{
    std::vector<double> m(f.size());
    for (std::size_t j = 0; j < f.size(); ++j) m[j] = f[j] * f.grid().measure(j);
    return m;
}

double point_cost(const Grid& g, std::size_t i, std::size_t j)
{
    if (g.is_radial()) {
        const double d = g.radial().centers[i] - g.radial().centers[j];
        return d * d;
    }
    const auto& b = g.box();
    const double dx = b.x(i % b.nx) - b.x(j % b.nx);
    const double dy = b.y(i / b.nx) - b.y(j / b.nx);
    return dx * dx + dy * dy;
}

std::vector<double> cost_matrix(const Grid& g)
{
    const std::size_t n = g.size();
    std::vector<double> c(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) c[i * n + j] = point_cost(g, i, j);
    }
    return c;
}

// Equal totals up to 1e-10 relative; the second marginal is rescaled to the first.
void prepare_marginals(const DensityField& mu, const DensityField& rho, std::vector<double>& a,
                       std::vector<double>& b)
{
    if (mu.size() != rho.size()) throw std::invalid_argument("transport: grid size mismatch");
    mu.validate();
    rho.validate();
    a = cell_masses(mu);
    b = cell_masses(rho);
    double ma = 0.0, mb = 0.0;
    for (double v : a) ma += v;
    for (double v : b) mb += v;
    if (std::abs(ma - mb) > 1e-10 * std::max({ma, mb, 1e-300})) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "transport needs equal masses, got " << ma << " and " << mb;
        throw std::invalid_argument(msg.str());
    }
    if (mb > 0.0) {
        for (double& v : b) v *= ma / mb;
    }
}

double log_sum_exp(const std::vector<double>& x)
{
    double mx = -kInf;
    for (double v : x) mx = std::max(mx, v);
    if (mx == -kInf) return -kInf;
    double s = 0.0;
    for (double v : x) s += std::exp(v - mx);
    return mx + std::log(s);
}

void normalize_weighted(const Grid& g, std::vector<double>& psi)
{
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < psi.size(); ++j) {
        num += psi[j] * g.measure(j);
        den += g.measure(j);
    }
    for (double& p : psi) p -= num / den;
}

}  // namespace

TransportResult w2_entropic(const DensityField& mu, const DensityField& rho, double eps,
                            const EntropicOptions& opts)
{
    if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("eps must be positive");
    std::vector<double> a_all, b_all;
    prepare_marginals(mu, rho, a_all, b_all);
    const std::size_t n_all = a_all.size();
    const auto C_all = cost_matrix(mu.grid());
    double m = 0.0;
    for (double v : a_all) m += v;

    TransportResult out;
    out.eps = eps;
    out.psi.assign(n_all, 0.0);
    out.plan.assign(n_all * n_all, 0.0);
    if (!(m > 0.0)) return out;

    // restrict to the supports; empty cells get their potential by a soft c-transform
    std::vector<std::size_t> rows, cols;
    for (std::size_t i = 0; i < n_all; ++i) {
        if (a_all[i] > 0.0) rows.push_back(i);
        if (b_all[i] > 0.0) cols.push_back(i);
    }
    const std::size_t nr = rows.size(), nc = cols.size();
    std::vector<double> a(nr), b(nc), C(nr * nc);
    for (std::size_t r = 0; r < nr; ++r) a[r] = a_all[rows[r]];
    for (std::size_t c = 0; c < nc; ++c) b[c] = b_all[cols[c]];
    for (std::size_t r = 0; r < nr; ++r) {
        for (std::size_t c = 0; c < nc; ++c) C[r * nc + c] = C_all[rows[r] * n_all + cols[c]];
    }

    // P = diag(u) K diag(v), K = exp((f + g - C) / e); f, g absorb large scalings.
    std::vector<double> f(nr, 0.0), g(nc, 0.0), u(nr, 1.0), v(nc, 1.0), K(nr * nc), Kv(nr), Ktu(nc);
    std::vector<double> tmp(std::max(nr, nc));
    auto rebuild = [&](double e) {
        for (std::size_t r = 0; r < nr; ++r) {
            for (std::size_t c = 0; c < nc; ++c) K[r * nc + c] = std::exp((f[r] + g[c] - C[r * nc + c]) / e);
        }
    };
    auto absorb = [&](double e) {
        for (std::size_t r = 0; r < nr; ++r) f[r] += e * std::log(u[r]);
        for (std::size_t c = 0; c < nc; ++c) g[c] += e * std::log(v[c]);
        std::fill(u.begin(), u.end(), 1.0);
        std::fill(v.begin(), v.end(), 1.0);
        rebuild(e);
    };
    // exact log-domain half steps, used when the kernel underflows
    auto log_sweep = [&](double e) {
        for (std::size_t r = 0; r < nr; ++r) {
            tmp.resize(nc);
            for (std::size_t c = 0; c < nc; ++c) tmp[c] = (g[c] - C[r * nc + c]) / e;
            f[r] = e * (std::log(a[r]) - log_sum_exp(tmp));
        }
        for (std::size_t c = 0; c < nc; ++c) {
            tmp.resize(nr);
            for (std::size_t r = 0; r < nr; ++r) tmp[r] = (f[r] - C[r * nc + c]) / e;
            g[c] = e * (std::log(b[c]) - log_sum_exp(tmp));
        }
        std::fill(u.begin(), u.end(), 1.0);
        std::fill(v.begin(), v.end(), 1.0);
        rebuild(e);
    };
    auto mult_K = [&]() {
        for (std::size_t r = 0; r < nr; ++r) {
            double s = 0.0;
            const double* row = &K[r * nc];
            for (std::size_t c = 0; c < nc; ++c) s += row[c] * v[c];
            Kv[r] = s;
        }
    };
    auto mult_Kt = [&]() {
        std::fill(Ktu.begin(), Ktu.end(), 0.0);
        for (std::size_t r = 0; r < nr; ++r) {
            const double* row = &K[r * nc];
            for (std::size_t c = 0; c < nc; ++c) Ktu[c] += row[c] * u[r];
        }
    };
    auto plan_cost = [&]() {
        double total = 0.0;
        for (std::size_t r = 0; r < nr; ++r) {
            for (std::size_t c = 0; c < nc; ++c) total += u[r] * K[r * nc + c] * v[c] * C[r * nc + c];
        }
        return total;
    };

    // Newton on the dual potentials (f, g) with u = v = 1. Sinkhorn stalls when eps is far
    // below the squared cell spacing, since the off-diagonal kernel entries are tiny.
    auto newton_polish = [&](double e, double tol) {
        const std::size_t dim = nr + nc - 1;  // g of the last column stays fixed
        std::vector<double> rs(nr), cs(nc);
        auto residual = [&]() {
            std::fill(rs.begin(), rs.end(), 0.0);
            std::fill(cs.begin(), cs.end(), 0.0);
            for (std::size_t r = 0; r < nr; ++r) {
                for (std::size_t c = 0; c < nc; ++c) {
                    rs[r] += K[r * nc + c];
                    cs[c] += K[r * nc + c];
                }
            }
            double s = 0.0;
            for (std::size_t r = 0; r < nr; ++r) s += std::abs(rs[r] - a[r]);
            for (std::size_t c = 0; c < nc; ++c) s += std::abs(cs[c] - b[c]);
            return s;
        };
        double res = residual();
        for (int it = 0; it < 100; ++it) {
            if (res <= tol) return true;
            Eigen::MatrixXd J = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
            Eigen::VectorXd rhs(static_cast<Eigen::Index>(dim));
            for (std::size_t r = 0; r < nr; ++r) {
                J(r, r) = rs[r] / e;
                rhs(r) = a[r] - rs[r];
                for (std::size_t c = 0; c + 1 < nc; ++c) {
                    J(r, nr + c) = J(nr + c, r) = K[r * nc + c] / e;
                }
            }
            for (std::size_t c = 0; c + 1 < nc; ++c) {
                J(nr + c, nr + c) = cs[c] / e;
                rhs(nr + c) = b[c] - cs[c];
            }
            // a disconnected plan leaves J singular; a tiny ridge keeps the solve defined
            J.diagonal().array() += 1e-14 * J.diagonal().maxCoeff();
            const Eigen::VectorXd d = J.ldlt().solve(rhs);
            if (!d.allFinite()) return false;
            const auto f0 = f, g0 = g;
            double t = 1.0, next = kInf;
            for (int bt = 0; bt < 40; ++bt) {
                for (std::size_t r = 0; r < nr; ++r) f[r] = f0[r] + t * d(r);
                for (std::size_t c = 0; c + 1 < nc; ++c) g[c] = g0[c] + t * d(nr + c);
                rebuild(e);
                next = residual();
                if (next < res) break;
                t *= 0.5;
            }
            if (!(next < res)) {
                f = f0;
                g = g0;
                rebuild(e);
                residual();
                return false;
            }
            res = next;
        }
        return res <= tol;
    };

    double e = std::max(eps, *std::max_element(C.begin(), C.end()));
    log_sweep(e);
    std::size_t iters = 0;
    double err = kInf;
    while (true) {
        const bool last = e <= eps;
        const double tol = (last ? opts.marginal_tol : std::max(opts.marginal_tol, 1e-5)) * m;
        std::size_t stage_iters = 0;
        while (true) {
            mult_K();
            bool bad = false;
            err = 0.0;
            for (std::size_t r = 0; r < nr; ++r) {
                if (!(Kv[r] > 0.0) || !std::isfinite(Kv[r])) bad = true;
                err += std::abs(u[r] * Kv[r] - a[r]);
            }
            if (bad) {
                log_sweep(e);
                ++iters;
                continue;
            }
            if (err <= tol && stage_iters > 0) break;
            if (last && stage_iters >= opts.polish_after) {
                absorb(e);
                if (newton_polish(e, tol)) {
                    mult_K();
                    err = 0.0;
                    for (std::size_t r = 0; r < nr; ++r) err += std::abs(Kv[r] - a[r]);
                    break;
                }
            }
            if (iters >= opts.max_iterations) {
                throw NumericalFailure("entropic transport did not reach the marginal tolerance", iters, err);
            }
            if (!last && stage_iters >= 2000) break;
            for (std::size_t r = 0; r < nr; ++r) u[r] = a[r] / Kv[r];
            mult_Kt();
            for (std::size_t c = 0; c < nc; ++c) {
                v[c] = Ktu[c] > 0.0 ? b[c] / Ktu[c] : 1.0;
                if (!(Ktu[c] > 0.0)) bad = true;
            }
            if (bad) log_sweep(e);
            ++iters;
            ++stage_iters;
            double big = 0.0;
            for (double x : u) big = std::max(big, std::abs(std::log(x)));
            for (double x : v) big = std::max(big, std::abs(std::log(x)));
            if (big > 50.0) absorb(e);
        }
        out.stage_costs.push_back(plan_cost());
        if (last) break;
        absorb(e);
        e = std::max(eps, e * opts.anneal_factor);
        rebuild(e);
    }

    out.cost2 = out.stage_costs.back();
    out.iterations = iters;
    out.marginal_error = err;
    for (std::size_t r = 0; r < nr; ++r) {
        for (std::size_t c = 0; c < nc; ++c) out.plan[rows[r] * n_all + cols[c]] = u[r] * K[r * nc + c] * v[c];
    }
    for (std::size_t r = 0; r < nr; ++r) f[r] += e * std::log(u[r]);
    for (std::size_t c = 0; c < nc; ++c) g[c] += e * std::log(v[c]);
    tmp.resize(nc);
    for (std::size_t i = 0; i < n_all; ++i) {
        for (std::size_t c = 0; c < nc; ++c) tmp[c] = (g[c] - C_all[i * n_all + cols[c]]) / e;
        out.psi[i] = -e * log_sum_exp(tmp);
    }
    normalize_weighted(mu.grid(), out.psi);
    return out;
}

TransportResult w2_exact_lp(const DensityField& mu, const DensityField& rho)
{
    std::vector<double> supply, demand;
    prepare_marginals(mu, rho, supply, demand);
    const std::size_t n = supply.size();
    const auto C = cost_matrix(mu.grid());
    double m = 0.0;
    for (double v : supply) m += v;
    const double tiny = 1e-15 * std::max(m, 1e-300);

    // Nodes: [0, n) sources, [n, 2n) sinks, S = 2n, T = 2n + 1.
    // Reduced costs c(u, v) + p[u] - p[v] stay nonnegative on residual edges.
    const std::size_t S = 2 * n, T = 2 * n + 1, V = 2 * n + 2;
    std::vector<double> flow(n * n, 0.0), p(V, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double best = kInf;
        for (std::size_t i = 0; i < n; ++i) best = std::min(best, C[i * n + j]);
        p[n + j] = best;
    }
    p[T] = *std::min_element(p.begin() + static_cast<long>(n), p.begin() + static_cast<long>(2 * n));

    std::vector<double> dist(V);
    std::vector<long> prev(V);
    std::vector<bool> done(V);
    std::size_t augmentations = 0;
    const std::size_t cap = 20 * V * V + 100;
    double remaining = m;
    while (remaining > tiny * static_cast<double>(n)) {
        if (++augmentations > cap) throw NumericalFailure("exact transport did not terminate", augmentations, remaining);
        std::fill(dist.begin(), dist.end(), kInf);
        std::fill(prev.begin(), prev.end(), -1);
        std::fill(done.begin(), done.end(), false);
        dist[S] = 0.0;
        auto relax = [&](std::size_t from, std::size_t to, double cost) {
            const double rc = std::max(0.0, cost + p[from] - p[to]);
            if (dist[from] + rc < dist[to]) {
                dist[to] = dist[from] + rc;
                prev[to] = static_cast<long>(from);
            }
        };
        while (true) {
            std::size_t x = V;
            double best = kInf;
            for (std::size_t y = 0; y < V; ++y) {
                if (!done[y] && dist[y] < best) {
                    best = dist[y];
                    x = y;
                }
            }
            if (x == V || x == T) break;
            done[x] = true;
            if (x == S) {
                for (std::size_t i = 0; i < n; ++i) {
                    if (supply[i] > tiny) relax(S, i, 0.0);
                }
            } else if (x < n) {
                for (std::size_t j = 0; j < n; ++j) relax(x, n + j, C[x * n + j]);
            } else {
                const std::size_t j = x - n;
                for (std::size_t i = 0; i < n; ++i) {
                    if (flow[i * n + j] > tiny) relax(x, i, -C[i * n + j]);
                }
                if (demand[j] > tiny) relax(x, T, 0.0);
            }
        }
        if (!(dist[T] < kInf)) throw NumericalFailure("exact transport found no augmenting path", augmentations, remaining);
        for (std::size_t y = 0; y < V; ++y) p[y] += std::min(dist[y], dist[T]);

        // bottleneck along T <- sink <- ... <- source <- S
        const auto last_sink = static_cast<std::size_t>(prev[T]);
        double push = demand[last_sink - n];
        std::size_t y = last_sink;
        while (static_cast<std::size_t>(prev[y]) != S) {
            const auto x = static_cast<std::size_t>(prev[y]);
            if (x >= n) push = std::min(push, flow[y * n + (x - n)]);
            y = x;
        }
        const std::size_t first_source = y;
        push = std::min(push, supply[first_source]);
        y = last_sink;
        while (static_cast<std::size_t>(prev[y]) != S) {
            const auto x = static_cast<std::size_t>(prev[y]);
            if (x < n) flow[x * n + (y - n)] += push;
            else flow[y * n + (x - n)] -= push;
            y = x;
        }
        supply[first_source] -= push;
        demand[last_sink - n] -= push;
        remaining -= push;
    }

    TransportResult out;
    out.iterations = augmentations;
    out.marginal_error = std::max(remaining, 0.0);
    out.plan = flow;
    for (std::size_t k = 0; k < n * n; ++k) out.cost2 += flow[k] * C[k];
    // dual: psi_i + phi_j <= C_ij with phi_j = p_sink_j - p_S; psi by c-transform
    out.psi.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double best = kInf;
        for (std::size_t j = 0; j < n; ++j) {
            if (rho[j] > 0.0) best = std::min(best, C[i * n + j] - (p[n + j] - p[S]));
        }
        out.psi[i] = std::isfinite(best) ? best : 0.0;
    }
    normalize_weighted(mu.grid(), out.psi);
    return out;
}

}  // namespace chemoflow
