// Acceptance checks, one PASS/FAIL line per criterion.

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "chemoflow/blowup.hpp"
#include "chemoflow/jko.hpp"
#include "chemoflow/oracle.hpp"
#include "chemoflow/poisson.hpp"
#include "chemoflow/transport.hpp"
#include "oracles.hpp"

using namespace chemoflow;

namespace {

constexpr double pi = std::numbers::pi;

int failed = 0;

// every accepted JKO step seen by any criterion, for criterion 4
double worst_el = 0.0;
double worst_min_density = std::numeric_limits<double>::infinity();
std::size_t steps_seen = 0;

void note_run(const Trajectory& t)
{
    for (std::size_t k = 1; k < t.records.size(); ++k) {
        worst_el = std::max(worst_el, t.records[k].el_residual);
        worst_min_density = std::min(worst_min_density, t.records[k].min_density);
        ++steps_seen;
    }
}

Trajectory scheme(const SchemeConfig& c, const SpeciesState& s)
{
    auto t = run_scheme(c, s);
    note_run(t);
    return t;
}

void report(int id, bool ok, const std::string& what, double seconds)
{
    std::printf("%s C%d %s (%.2f s)\n", ok ? "PASS" : "FAIL", id, what.c_str(), seconds);
    std::fflush(stdout);
    if (!ok) ++failed;
}

template <class F>
void criterion(int id, F&& body)
{
    const auto t0 = std::chrono::steady_clock::now();
    std::string what;
    bool ok = false;
    double limit = 0.0;
    try {
        ok = body(what, limit);
    } catch (const std::exception& e) {
        what += std::string(" exception: ") + e.what();
        ok = false;
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (limit > 0.0 && s > limit) {
        what += " runtime over " + std::to_string(limit) + " s";
        ok = false;
    }
    report(id, ok, what, s);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

DensityField gaussian(const GridPtr& g, double sigma, double floor, double m)
{
    std::vector<double> v(g->size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = std::exp(-g->center_norm2(j) / (2.0 * sigma * sigma)) + floor;
    SpeciesState s({DensityField(g, v)}, {0.0});
    s.renormalize(0, m);
    return s.field(0);
}

DensityField random_field(const GridPtr& g, std::mt19937_64& rng, double lo, double hi)
{
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(g->size());
    for (double& x : v) x = u(rng);
    return DensityField(g, v);
}

DensityField with_mass(const DensityField& f, double m)
{
    SpeciesState s({f}, {0.0});
    s.renormalize(0, m);
    return s.field(0);
}

std::vector<double> cell_masses(const DensityField& f)
{
    std::vector<double> out(f.size());
    for (std::size_t j = 0; j < f.size(); ++j) out[j] = f[j] * f.grid().measure(j);
    return out;
}

std::vector<double> center_costs(const Grid& g)
{
    const std::size_t n = g.size();
    std::vector<double> C(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (g.is_radial()) {
                const double d = g.radial().centers[i] - g.radial().centers[j];
                C[i * n + j] = d * d;
            } else {
                const auto& b = g.box();
                const double dx = b.x(i % b.nx) - b.x(j % b.nx), dy = b.y(i / b.nx) - b.y(j / b.nx);
                C[i * n + j] = dx * dx + dy * dy;
            }
        }
    }
    return C;
}

// subcritical two-species state used by the scheme criteria
SpeciesState mild_pair(std::size_t n)
{
    const auto g = make_radial_grid(n);
    return SpeciesState({gaussian(g, 0.4, 0.05, 1.0), gaussian(g, 0.5, 0.05, 1.0)}, {1.0, 0.5});
}

}  // namespace

int main()
{
    criterion(1, [](std::string& what, double& limit) {
        limit = 1.0;
        double worst_ratio = 0.0, min_order = 1e9, prev = 0.0;
        for (std::size_t n : {32u, 64u, 128u}) {
            const auto g = make_radial_grid(n);
            const auto v = solve_dirichlet(DensityField::constant(g, 1.0));
            double err = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double r = g->radial().centers[j];
                err = std::max(err, std::abs(v.values[j] - (1.0 - r * r) / 4.0));
            }
            worst_ratio = std::max(worst_ratio, err / (2.0 / double(n * n)));
            if (prev > 0.0) min_order = std::min(min_order, std::log2(prev / err));
            prev = err;
        }
        what = fmt("Poisson: max error / (2 h^2) = %.3g, observed order %.3f", worst_ratio, min_order);
        return worst_ratio <= 1.0 && min_order >= 1.9;
    });

    criterion(2, [](std::string& what, double& limit) {
        limit = 10.0;
        std::mt19937_64 rng(2024);
        double worst = 0.0;
        std::size_t grids = 0;
        for (std::size_t n = 1; n <= 16; ++n) {
            const auto g = make_radial_grid(n);
            const auto C = center_costs(*g);
            for (int trial = 0; trial < 3; ++trial) {
                const auto mu = random_field(g, rng, 0.1, 2.0);
                const auto rho = with_mass(random_field(g, rng, 0.1, 2.0), mass(mu));
                const double lp = oracle::lp_transport(cell_masses(mu), cell_masses(rho), C);
                worst = std::max(worst, std::abs(w2_radial(mu, rho, RadialModel::Atomic).cost2 - lp));
            }
            ++grids;
        }
        for (std::size_t nx = 2; nx <= 8; ++nx) {
            for (std::size_t ny = 2; nx * ny <= 16; ++ny) {
                const auto g = make_box_grid(nx, ny, 1.0);
                const auto C = center_costs(*g);
                for (int trial = 0; trial < 2; ++trial) {
                    const auto mu = random_field(g, rng, 0.1, 2.0);
                    const auto rho = with_mass(random_field(g, rng, 0.1, 2.0), mass(mu));
                    const double lp = oracle::lp_transport(cell_masses(mu), cell_masses(rho), C);
                    worst = std::max(worst, std::abs(w2_entropic(mu, rho, 1e-4).cost2 - lp));
                }
                ++grids;
            }
        }
        const std::size_t n = 512;
        const auto g = make_radial_grid(n);
        std::vector<double> inner(n, 0.0);
        for (std::size_t j = 0; j < n / 2; ++j) inner[j] = 4.0 / pi;
        const double sub = w2_radial(DensityField(g, inner), DensityField::constant(g, 1.0 / pi)).cost2;
        what = fmt("transport: %g grids, max |cost - LP| = %.3g, subdisk cost %.10f", double(grids), worst, sub);
        return worst <= 1e-6 && std::abs(sub - 0.125) <= 1e-4;
    });

    criterion(3, [](std::string& what, double& limit) {
        limit = 30.0;
        const auto g = make_radial_grid(8);
        const auto& R = g->radial();
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(0.1, 3.0);
        const double tau = 0.1;
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> nv(8);
            for (double& x : nv) x = u(rng);
            const DensityField nu(g, nv);
            const double m = mass(nu);
            auto phi_oracle = [&](const std::vector<double>& x) {
                std::vector<double> d(8);
                double e = 0.0;
                for (std::size_t j = 0; j < 8; ++j) {
                    d[j] = x[j] / R.measures[j];
                    e += x[j] * std::log(d[j]);
                }
                return e + oracle::radial_w2_quadrature(R.edges, nv, d) / (2.0 * tau);
            };
            std::vector<double> x0(8);
            for (std::size_t j = 0; j < 8; ++j) x0[j] = m * R.measures[j] / pi;
            const auto x = oracle::projected_descent(phi_oracle, x0, m, 1e-12);
            const auto step = jko_step_detailed(tau, SpeciesState({nu}, {0.0}), 0.0);
            worst_el = std::max(worst_el, step.diag.el_residual);
            ++steps_seen;
            double l1 = 0.0;
            for (std::size_t j = 0; j < 8; ++j) {
                l1 += std::abs(x[j] - step.state.field(0)[j] * R.measures[j]);
                worst_min_density = std::min(worst_min_density, step.state.field(0)[j]);
            }
            worst = std::max(worst, l1);
        }
        what = fmt("JKO step vs projected descent, 20 predictors: max L1 = %.3g", worst);
        return worst <= 1e-6;
    });

    // criterion 4 is reported after every run has been seen

    criterion(5, [](std::string& what, double& limit) {
        (void)limit;
        const auto s = mild_pair(64);
        double worst = std::numeric_limits<double>::infinity();
        std::size_t steps = 0;
        bool all_done = true;
        for (double tau : {1e-2, 5e-3}) {
            for (int kind = 0; kind < 2; ++kind) {
                SchemeConfig c;
                c.tau = tau;
                c.T = 0.1;
                c.growth = kind == 0 ? GrowthSpec::birth({0.5, 0.5}) : GrowthSpec::death({0.5, 0.5});
                const auto t = scheme(c, s);
                all_done = all_done && t.completed && t.records.size() == 11 + (tau < 1e-2 ? 10 : 0);
                for (const auto& r : t.records) worst = std::min(worst, r.bound_slack);
                steps += t.records.size() - 1;
            }
        }
        what = fmt("L-infinity recursions, birth and death, %g steps: min slack %.4g", double(steps), worst);
        return all_done && worst >= 0.0;
    });

    criterion(6, [](std::string& what, double& limit) {
        (void)limit;
        const auto s = mild_pair(64);
        std::vector<double> cbar;
        for (double tau : {0.01, 0.005, 0.0025}) {
            SchemeConfig c;
            c.tau = tau;
            c.T = 0.1;
            c.keep_states = false;
            const auto t = scheme(c, s);
            if (!t.completed) throw std::runtime_error(t.failure);
            cbar.push_back(t.sum_w2 / tau);
        }
        const auto [lo, hi] = std::minmax_element(cbar.begin(), cbar.end());
        const double spread = (*hi - *lo) / *lo;
        what = fmt("sum W2 / tau at tau, tau/2, tau/4: %.5g %.5g %.5g, spread %.3g", cbar[0], cbar[1], cbar[2], spread);
        return spread <= 0.25;
    });

    criterion(7, [](std::string& what, double& limit) {
        (void)limit;
        const auto s = mild_pair(64);
        SchemeConfig c;
        c.tau = 1e-2;
        c.T = 0.1;
        c.keep_states = false;
        c.growth = GrowthSpec::death({0.5, 1.0});
        const auto d = scheme(c, s);
        double worst_death = 0.0, worst_cons = 0.0;
        const double rates[2] = {0.5, 1.0};
        for (const auto& r : d.records) {
            for (std::size_t i = 0; i < 2; ++i) {
                const double expect = s.masses()[i] * std::pow(1.0 - rates[i] * c.tau, double(r.k));
                worst_death = std::max(worst_death, std::abs(r.masses[i] - expect) / expect);
            }
        }
        c.growth = GrowthSpec::none();
        const auto k = scheme(c, s);
        for (const auto& r : k.records) {
            for (std::size_t i = 0; i < 2; ++i) {
                worst_cons = std::max(worst_cons, std::abs(r.masses[i] - s.masses()[i]) / s.masses()[i]);
            }
        }
        what = fmt("mass bookkeeping: death rel. error %.3g, conservative rel. error %.3g", worst_death, worst_cons);
        return d.completed && k.completed && worst_death <= 1e-12 && worst_cons <= 1e-12;
    });

    criterion(8, [](std::string& what, double& limit) {
        (void)limit;
        const auto s = mild_pair(64);
        SchemeConfig c;
        c.T = 0.1;
        c.tau = 0.01;
        const double r1 = weak_form_residual(scheme(c, s));
        c.tau = 0.005;
        const double r2 = weak_form_residual(scheme(c, s));
        what = fmt("weak-form residual at tau %.4g, at tau/2 %.4g, ratio %.3f", r1, r2, r2 / r1);
        return r2 <= 0.6 * r1;
    });

    criterion(9, [](std::string& what, double& limit) {
        limit = 1.0;
        // equality case: c1 = c2 = 1 and Lambda = 2, with m = (1, 1) and equal alphas
        const double a = std::sqrt(8.0 * pi);
        const BlowupParams eq{a, a, 1.0, 1.0, 1.0, 1.0};
        const auto r = criterion_theorem1(eq);
        const double gap = std::abs(r.lhs - r.rhs);
        const double bound_at_min = beta_bound_theorem1(eq, t_min_theorem1(eq));

        // z by bisection on 4(m1 z + m2) = (a1 m1 z + a2 m2)^2 / (2 pi)
        auto f = [](double z) { return 4.0 * (z + 1.0) - std::pow(10.0 * z + 1.0, 2) / (2.0 * pi); };
        const auto br = boost::math::tools::bisect(f, 0.0, 1.0, [](double x, double y) { return std::abs(y - x) < 1e-15; });
        const double z_oracle = 0.5 * (br.first + br.second);
        const double z = z_case2({10.0, 1.0, 1.0, 1.0, 1.0, 0.0});

        const double lam = lambda_const({1.0, 1.0, 4.0 * pi, 4.0 * pi, 0.0, 0.0});
        const double lam_oracle = std::pow(8.0 * pi, 2) / (8.0 * pi * 8.0 * pi);
        what = fmt("blow-up certificates: equality gap %.2g, bound(t_min) %.2g, z = %.8f (oracle gap %.2g)", gap,
                   bound_at_min, z, std::abs(z - z_oracle));
        what += fmt(", Lambda = %.12f", lam);
        return r.holds && gap <= 1e-6 && std::abs(bound_at_min) <= 1e-6 && std::abs(z - z_oracle) <= 1e-6 &&
               std::abs(z - 0.5176) <= 1e-4 && std::abs(lam - lam_oracle) <= 1e-6 && std::abs(lam - 1.0) <= 1e-6;
    });

    criterion(10, [](std::string& what, double& limit) {
        (void)limit;
        const auto g = make_radial_grid(256);
        SpeciesState s({gaussian(g, 0.3, 0.05, 2.0 * pi), gaussian(g, 0.4, 0.05, 2.0 * pi)}, {1.0, 1.0});
        ReferenceConfig c;
        c.T = 0.5;
        c.sample_dt = 0.01;
        c.decay_rates = {0.5, 0.2};
        c.keep_states = false;
        const auto t = run_reference(c, s);
        const double v = second_moment_inequality_check(t, {1.0, 1.0, 2.0 * pi, 2.0 * pi, 0.5, 0.2});
        what = fmt("second-moment inequality on the reference run (n = 256, %g samples): max rel. violation %.3g",
                   double(t.records.size()), v);
        return t.completed && v <= 1e-2;
    });

    criterion(11, [](std::string& what, double& limit) {
        limit = 300.0;
        const auto s = mild_pair(128);
        SchemeConfig c;
        c.tau = 1e-3;
        c.T = 0.1;
        c.keep_states = false;
        const auto j = scheme(c, s);
        ReferenceConfig rc;
        rc.T = 0.1;
        rc.sample_dt = 0.01;
        rc.keep_states = false;
        const auto r = run_reference(rc, s);
        double diff = 0.0, total = 0.0;
        for (std::size_t i = 0; i < 2; ++i) {
            diff += l1_distance(j.final_state.field(i), r.final_state.field(i));
            total += mass(r.final_state.field(i));
        }
        what = fmt("JKO vs finite volume at T = 0.1 (n = 128, tau = 1e-3): relative L1 %.4g", diff / total);
        return j.completed && r.completed && diff / total <= 0.05;
    });

    criterion(12, [](std::string& what, double& limit) {
        (void)limit;
        const auto g = make_radial_grid(256);
        auto run = [&](double m) {
            SpeciesState s({gaussian(g, 0.25, 0.05, m), gaussian(g, 0.25, 0.05, m)}, {1.0, 1.0});
            ReferenceConfig c;
            c.T = 1.0;
            c.sample_dt = 0.005;
            c.keep_states = false;
            c.stop_linf = 100.0 * linf_norm(s);
            return run_reference(c, s);
        };
        const auto sup = run(9.0 * pi);  // alpha1^2 m10 = 9 pi > 8 pi
        const auto sub = run(2.0 * pi);  // Lambda = 0.5
        const auto hit = detect_blowup_numeric(sup, 50.0 * sup.records.front().linf);
        double peak = 0.0;
        for (const auto& rec : sub.records) peak = std::max(peak, rec.linf);
        const double ratio = peak / sub.records.front().linf;
        what = fmt("dichotomy: supercritical detection at t = %.4g, subcritical peak ratio %.4g (reached t = %.3g)",
                   hit ? *hit : -1.0, ratio, sub.records.back().t);
        return hit && *hit < 1.0 && sub.completed && sub.records.back().t == 1.0 && ratio <= 2.0;
    });

    criterion(13, [](std::string& what, double& limit) {
        (void)limit;
        std::mt19937_64 rng(13);
        std::uniform_int_distribution<int> cells(4, 200);
        double worst = 0.0;
        for (int pair = 0; pair < 50; ++pair) {
            const auto g = make_radial_grid(static_cast<std::size_t>(cells(rng)),
                                            pair % 2 ? RadialSpacing::EqualArea : RadialSpacing::UniformRadius);
            const auto nu = random_field(g, rng, 0.0, 5.0);
            const auto rho = with_mass(random_field(g, rng, 0.0, 5.0), mass(nu));
            const double M = std::max(max_value(nu), max_value(rho));
            const auto tr = w2_radial(nu, rho);
            for (int k = 1; k < 20; ++k) {
                const auto mid = displacement_interpolation(nu, tr, k / 20.0);
                worst = std::max(worst, max_value(mid) / M);
            }
        }
        what = fmt("displacement interpolants of 50 pairs: max sup / M = %.6f", worst);
        return worst <= 1.0 + 1e-3;
    });

    criterion(4, [](std::string& what, double& limit) {
        (void)limit;
        what = fmt("optimality residual over %g accepted steps: max %.3g, min density %.3g", double(steps_seen), worst_el,
                   worst_min_density);
        return steps_seen > 0 && worst_el <= 1e-8 && worst_min_density > 0.0;
    });

    std::printf("%s: %d criteria failed\n", failed ? "FAILED" : "ALL PASSED", failed);
    return failed ? EXIT_FAILURE : EXIT_SUCCESS;
}
