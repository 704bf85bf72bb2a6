#pragma once

// Independent reference computations used only by the tests.

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace oracle {

/// Two-phase dense tableau simplex for min c.x, A x = b, x >= 0 with b >= 0.
/// Bland's rule, so it terminates on degenerate transport problems.
inline double simplex_min(std::vector<std::vector<double>> A, std::vector<double> b, const std::vector<double>& c)
{
    const std::size_t m = A.size(), n = c.size();
    const std::size_t cols = n + m + 1;  // variables, artificials, rhs
    std::vector<std::vector<double>> T(m + 1, std::vector<double>(cols, 0.0));
    std::vector<std::size_t> basis(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (b[i] < 0.0) {
            for (double& v : A[i]) v = -v;
            b[i] = -b[i];
        }
        for (std::size_t j = 0; j < n; ++j) T[i][j] = A[i][j];
        T[i][n + i] = 1.0;
        T[i][cols - 1] = b[i];
        basis[i] = n + i;
    }
    const double eps = 1e-13;

    auto pivot = [&](std::size_t r, std::size_t col) {
        const double p = T[r][col];
        for (double& v : T[r]) v /= p;
        for (std::size_t i = 0; i <= m; ++i) {
            if (i == r) continue;
            const double f = T[i][col];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < cols; ++j) T[i][j] -= f * T[r][j];
        }
        basis[r] = col;
    };
    auto run = [&](std::size_t allowed) {
        for (int guard = 0; guard < 100000; ++guard) {
            std::size_t enter = cols;
            for (std::size_t j = 0; j < allowed; ++j) {
                if (T[m][j] < -eps) {
                    enter = j;
                    break;
                }
            }
            if (enter == cols) return;
            std::size_t leave = m;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m; ++i) {
                if (T[i][enter] > eps) {
                    const double ratio = T[i][cols - 1] / T[i][enter];
                    if (ratio < best - 1e-15 || (std::abs(ratio - best) <= 1e-15 && basis[i] < basis[leave])) {
                        best = ratio;
                        leave = i;
                    }
                }
            }
            if (leave == m) throw std::runtime_error("simplex: unbounded");
            pivot(leave, enter);
        }
        throw std::runtime_error("simplex: iteration guard");
    };

    // phase one: minimize the sum of artificials
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < cols; ++j) T[m][j] -= T[i][j];
        T[m][n + i] = 0.0;
    }
    run(n + m);
    if (-T[m][cols - 1] > 1e-9) throw std::runtime_error("simplex: infeasible");
    // drive remaining artificials out of the basis where possible
    for (std::size_t i = 0; i < m; ++i) {
        if (basis[i] < n) continue;
        for (std::size_t j = 0; j < n; ++j) {
            if (std::abs(T[i][j]) > 1e-10) {
                pivot(i, j);
                break;
            }
        }
    }
    // phase two
    std::fill(T[m].begin(), T[m].end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) T[m][j] = c[j];
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t bj = basis[i];
        if (bj < n && T[m][bj] != 0.0) {
            const double f = T[m][bj];
            for (std::size_t j = 0; j < cols; ++j) T[m][j] -= f * T[i][j];
        }
    }
    run(n);
    return -T[m][cols - 1];
}

/// Optimal transport cost between discrete measures a (size p) and b (size q)
/// with cost matrix C (row-major p x q). b is rescaled to the mass of a.
inline double lp_transport(const std::vector<double>& a, std::vector<double> b, const std::vector<double>& C)
{
    const std::size_t p = a.size(), q = b.size();
    const double sa = std::accumulate(a.begin(), a.end(), 0.0), sb = std::accumulate(b.begin(), b.end(), 0.0);
    for (double& v : b) v *= sa / sb;
    // one marginal constraint is redundant
    std::vector<std::vector<double>> A;
    std::vector<double> rhs;
    for (std::size_t i = 0; i < p; ++i) {
        std::vector<double> row(p * q, 0.0);
        for (std::size_t j = 0; j < q; ++j) row[i * q + j] = 1.0;
        A.push_back(row);
        rhs.push_back(a[i]);
    }
    for (std::size_t j = 0; j + 1 < q; ++j) {
        std::vector<double> row(p * q, 0.0);
        for (std::size_t i = 0; i < p; ++i) row[i * q + j] = 1.0;
        A.push_back(row);
        rhs.push_back(b[j]);
    }
    return simplex_min(A, rhs, C);
}

/// Squared quadratic Wasserstein distance between two radial densities that are
/// constant on annuli with the given edge radii, measured by quadrature of
/// (R_mu(q) - R_rho(q))^2 over the mass variable q. Masses must agree.
inline double radial_w2_quadrature(const std::vector<double>& edges, const std::vector<double>& mu,
                                   const std::vector<double>& rho)
{
    const std::size_t n = mu.size();
    const double pi = std::numbers::pi;
    auto cumulative = [&](const std::vector<double>& d) {
        std::vector<double> Q(n + 1, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            Q[j + 1] = Q[j] + pi * d[j] * (edges[j + 1] * edges[j + 1] - edges[j] * edges[j]);
        }
        return Q;
    };
    const auto Qm = cumulative(mu), Qr = cumulative(rho);
    std::vector<double> cuts(Qm.begin(), Qm.end());
    cuts.insert(cuts.end(), Qr.begin(), Qr.end());
    std::sort(cuts.begin(), cuts.end());
    const double total = Qm.back();
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double lo = cuts[k], hi = std::min(cuts[k + 1], total);
        if (!(hi > lo)) continue;
        const double mid = 0.5 * (lo + hi);
        // pick the cell on each side from the segment midpoint so the pieces stay smooth
        auto cell_of = [&](const std::vector<double>& Q) {
            std::size_t j = static_cast<std::size_t>(std::upper_bound(Q.begin(), Q.end(), mid) - Q.begin());
            return std::clamp<std::size_t>(j, 1, n) - 1;
        };
        const std::size_t jm = cell_of(Qm), jr = cell_of(Qr);
        auto f = [&](double q) {
            const double sm = edges[jm] * edges[jm] + (q - Qm[jm]) / (pi * mu[jm]);
            const double sr = edges[jr] * edges[jr] + (q - Qr[jr]) / (pi * rho[jr]);
            const double d = std::sqrt(std::max(sm, 0.0)) - std::sqrt(std::max(sr, 0.0));
            return d * d;
        };
        sum += boost::math::quadrature::gauss<double, 30>::integrate(f, lo, hi);
    }
    return sum;
}

/// Euclidean projection onto {x : x_j >= lo, sum x = total}.
inline std::vector<double> project_capped_simplex(const std::vector<double>& y, double total, double lo)
{
    const std::size_t n = y.size();
    const double budget = total - lo * static_cast<double>(n);
    std::vector<double> z(n);
    for (std::size_t j = 0; j < n; ++j) z[j] = y[j] - lo;
    std::vector<double> s = z;
    std::sort(s.begin(), s.end(), std::greater<>());
    double acc = 0.0, theta = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        acc += s[k];
        const double t = (acc - budget) / static_cast<double>(k + 1);
        if (k + 1 == n || s[k + 1] <= t) {
            theta = t;
            break;
        }
    }
    std::vector<double> x(n);
    for (std::size_t j = 0; j < n; ++j) x[j] = std::max(z[j] - theta, 0.0) + lo;
    return x;
}

/// Projected gradient descent with Barzilai-Borwein steps and an Armijo safeguard
/// for min f over {x >= lo, sum x = total}. The gradient is taken by central differences.
inline std::vector<double> projected_descent(const std::function<double(const std::vector<double>&)>& f,
                                             std::vector<double> x, double total, double lo,
                                             std::size_t max_iterations = 20000, double tol = 1e-11)
{
    const std::size_t n = x.size();
    auto grad = [&](const std::vector<double>& p) {
        std::vector<double> g(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double h = 1e-6 * std::max(1.0, std::abs(p[j]));
            auto a = p, b = p;
            a[j] += h;
            b[j] -= h;
            g[j] = (f(a) - f(b)) / (2.0 * h);
        }
        return g;
    };
    x = project_capped_simplex(x, total, lo);
    double fx = f(x);
    auto g = grad(x);
    double step = 1e-3;
    for (std::size_t it = 0; it < max_iterations; ++it) {
        std::vector<double> y(n);
        double t = step;
        std::vector<double> xn;
        double fn = 0.0;
        for (int bt = 0; bt < 60; ++bt) {
            for (std::size_t j = 0; j < n; ++j) y[j] = x[j] - t * g[j];
            xn = project_capped_simplex(y, total, lo);
            fn = f(xn);
            double dec = 0.0;
            for (std::size_t j = 0; j < n; ++j) dec += g[j] * (x[j] - xn[j]);
            if (fn <= fx - 1e-4 * dec || dec <= 1e-300) break;
            t *= 0.5;
        }
        double move = 0.0;
        for (std::size_t j = 0; j < n; ++j) move = std::max(move, std::abs(xn[j] - x[j]));
        const auto gn = grad(xn);
        double sy = 0.0, ss = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double sj = xn[j] - x[j], yj = gn[j] - g[j];
            sy += sj * yj;
            ss += sj * sj;
        }
        x = std::move(xn);
        fx = fn;
        g = gn;
        step = sy > 0.0 ? std::clamp(ss / sy, 1e-10, 1e3) : 1e-3;
        if (move < tol) break;
    }
    return x;
}

}  // namespace oracle
