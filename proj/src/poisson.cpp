#include "chemoflow/poisson.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <shared_mutex>
#include <stdexcept>
#include <tuple>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "chemoflow/errors.hpp"

namespace chemoflow {

namespace {

constexpr double kResidualTol = 1e-10;

struct BoxOperator {
    Eigen::SparseMatrix<double> stiffness;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factor;
};

// Stiffness K with K v = W f; conductances h_perp / h_par inside,
// doubled at boundary faces (ghost value mirrors to zero at the face).
std::shared_ptr<const BoxOperator> assemble_box(const BoxGrid& g)
{
    auto op = std::make_shared<BoxOperator>();
    const double gx = g.hy / g.hx, gy = g.hx / g.hy;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(5 * g.size());
    for (std::size_t iy = 0; iy < g.ny; ++iy) {
        for (std::size_t ix = 0; ix < g.nx; ++ix) {
            const auto c = static_cast<int>(g.index(ix, iy));
            double diag = 0.0;
            auto couple = [&](bool inside, std::size_t nb, double cond) {
                if (inside) {
                    diag += cond;
                    trips.emplace_back(c, static_cast<int>(nb), -cond);
                } else {
                    diag += 2.0 * cond;
                }
            };
            couple(ix > 0, ix > 0 ? g.index(ix - 1, iy) : 0, gx);
            couple(ix + 1 < g.nx, ix + 1 < g.nx ? g.index(ix + 1, iy) : 0, gx);
            couple(iy > 0, iy > 0 ? g.index(ix, iy - 1) : 0, gy);
            couple(iy + 1 < g.ny, iy + 1 < g.ny ? g.index(ix, iy + 1) : 0, gy);
            trips.emplace_back(c, c, diag);
        }
    }
    const auto n = static_cast<Eigen::Index>(g.size());
    op->stiffness.resize(n, n);
    op->stiffness.setFromTriplets(trips.begin(), trips.end());
    op->factor.compute(op->stiffness);
    if (op->factor.info() != Eigen::Success) {
        throw NumericalFailure("box Poisson factorization failed", 0, 0.0);
    }
    return op;
}

// Factorizations are cached per box geometry; readers share the lock.
std::shared_ptr<const BoxOperator> box_operator(const BoxGrid& g)
{
    using Key = std::tuple<std::size_t, std::size_t, double>;
    static std::map<Key, std::shared_ptr<const BoxOperator>> cache;
    static std::shared_mutex mutex;
    const Key key{g.nx, g.ny, g.half_width};
    {
        std::shared_lock lock(mutex);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    auto op = assemble_box(g);
    std::unique_lock lock(mutex);
    return cache.emplace(key, std::move(op)).first->second;
}

PotentialField solve_radial(const GridPtr& grid, std::span<const double> f)
{
    const auto& g = grid->radial();
    const std::size_t n = g.size();
    const auto kappa = radial_edge_resistance(g);

    std::vector<double> flux(n + 1, 0.0);  // cumulative source mass inside edge e
    for (std::size_t j = 0; j < n; ++j) flux[j + 1] = flux[j] + g.measures[j] * f[j];

    PotentialField out;
    out.grid = grid;
    out.values.assign(n, 0.0);
    out.values[n - 1] = kappa[n] * flux[n];
    for (std::size_t j = n - 1; j-- > 0;) out.values[j] = out.values[j + 1] + kappa[j + 1] * flux[j + 1];

    double res2 = 0.0, rhs2 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double kv = 0.0;
        if (j > 0) kv += (out.values[j] - out.values[j - 1]) / kappa[j];
        const double outer = j + 1 < n ? out.values[j + 1] : 0.0;
        kv += (out.values[j] - outer) / kappa[j + 1];
        const double rhs = g.measures[j] * f[j];
        res2 += (kv - rhs) * (kv - rhs);
        rhs2 += rhs * rhs;
    }
    out.relative_residual = rhs2 > 0.0 ? std::sqrt(res2 / rhs2) : std::sqrt(res2);

    out.grad_x.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const double r_in = j > 0 ? g.centers[j - 1] : -g.centers[0];
        const double v_in = j > 0 ? out.values[j - 1] : out.values[0];
        const double r_out = j + 1 < n ? g.centers[j + 1] : 1.0;
        const double v_out = j + 1 < n ? out.values[j + 1] : 0.0;
        out.grad_x[j] = (v_out - v_in) / (r_out - r_in);
    }
    return out;
}

PotentialField solve_box(const GridPtr& grid, std::span<const double> f)
{
    const auto& g = grid->box();
    const auto op = box_operator(g);
    const auto n = static_cast<Eigen::Index>(g.size());
    Eigen::VectorXd rhs(n);
    for (Eigen::Index j = 0; j < n; ++j) rhs[j] = g.cell_area() * f[static_cast<std::size_t>(j)];
    Eigen::VectorXd v = op->factor.solve(rhs);
    // one refinement sweep against the assembled operator
    Eigen::VectorXd r = rhs - op->stiffness * v;
    v += op->factor.solve(r);
    r = rhs - op->stiffness * v;

    PotentialField out;
    out.grid = grid;
    out.values.assign(v.data(), v.data() + n);
    const double rn = rhs.norm();
    out.relative_residual = rn > 0.0 ? r.norm() / rn : r.norm();

    out.grad_x.assign(g.size(), 0.0);
    out.grad_y.assign(g.size(), 0.0);
    for (std::size_t iy = 0; iy < g.ny; ++iy) {
        for (std::size_t ix = 0; ix < g.nx; ++ix) {
            const std::size_t c = g.index(ix, iy);
            const double vc = out.values[c];
            const double xl = ix > 0 ? out.values[g.index(ix - 1, iy)] : -vc;
            const double xr = ix + 1 < g.nx ? out.values[g.index(ix + 1, iy)] : -vc;
            const double yd = iy > 0 ? out.values[g.index(ix, iy - 1)] : -vc;
            const double yu = iy + 1 < g.ny ? out.values[g.index(ix, iy + 1)] : -vc;
            out.grad_x[c] = (xr - xl) / (2.0 * g.hx);
            out.grad_y[c] = (yu - yd) / (2.0 * g.hy);
        }
    }
    return out;
}

}  // namespace

std::vector<double> radial_edge_resistance(const RadialGrid& g)
{
    const std::size_t n = g.size();
    std::vector<double> kappa(n + 1, 0.0);
    for (std::size_t e = 1; e < n; ++e) {
        kappa[e] = (g.centers[e] - g.centers[e - 1]) / (2.0 * std::numbers::pi * g.edges[e]);
    }
    kappa[n] = (1.0 - g.centers[n - 1]) / (2.0 * std::numbers::pi);
    return kappa;
}

PotentialField solve_dirichlet(const GridPtr& grid, std::span<const double> source)
{
    if (source.size() != grid->size()) throw std::invalid_argument("Poisson source size mismatch");
    PotentialField out = grid->is_radial() ? solve_radial(grid, source) : solve_box(grid, source);
    if (!(out.relative_residual <= kResidualTol)) {
        throw NumericalFailure("Poisson solve residual above tolerance", 1, out.relative_residual);
    }
    return out;
}

PotentialField solve_dirichlet(const DensityField& source)
{
    return solve_dirichlet(source.grid_ptr(), source.values());
}

ChemicalPotential chemical_potential(const SpeciesState& state)
{
    const std::size_t n = state.grid().size();
    std::vector<double> combined(n, 0.0);
    ChemicalPotential out;
    for (std::size_t i = 0; i < state.species(); ++i) {
        const auto& f = state.field(i);
        for (std::size_t j = 0; j < n; ++j) combined[j] += state.alphas()[i] * f[j];
        out.per_species.push_back(solve_dirichlet(f));
    }
    out.combined = solve_dirichlet(state.grid_ptr(), combined);
    return out;
}

double gradient_inner(const DensityField& rho_a, const PotentialField& v_b)
{
    const auto& g = rho_a.grid();
    double s = 0.0;
    for (std::size_t j = 0; j < rho_a.size(); ++j) s += g.measure(j) * rho_a[j] * v_b.values[j];
    return s;
}

double l1_norm(const PotentialField& v)
{
    double s = 0.0;
    for (std::size_t j = 0; j < v.values.size(); ++j) s += v.grid->measure(j) * std::abs(v.values[j]);
    return s;
}

}  // namespace chemoflow
