#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "chemoflow/blowup.hpp"

using namespace chemoflow;

namespace {

constexpr double pi = std::numbers::pi;

// root of 4(m1 z + m2) = (a1 m1 z + a2 m2)^2 / (2 pi) in (0, 1] by bisection
double z_by_bisection(double a1, double a2, double m1, double m2)
{
    auto f = [&](double z) { return 4.0 * (m1 * z + m2) - std::pow(a1 * m1 * z + a2 * m2, 2) / (2.0 * pi); };
    auto tol = [](double a, double b) { return std::abs(b - a) < 1e-15; };
    const auto r = boost::math::tools::bisect(f, 0.0, 1.0, tol);
    return 0.5 * (r.first + r.second);
}

}  // namespace

TEST_CASE("Lambda by substitution")
{
    CHECK(lambda_const({1.0, 1.0, 4.0 * pi, 4.0 * pi, 0.0, 0.0}) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(lambda_const({2.0, 1.0, 1.0, 3.0, 0.0, 0.0}) ==
          doctest::Approx(25.0 / (32.0 * pi)).epsilon(1e-14));
}

TEST_CASE("equality case of the two-rate criterion")
{
    const double a = std::sqrt(8.0 * pi);  // m = (1, 1) gives Lambda = 2
    const BlowupParams p{a, a, 1.0, 1.0, 1.0, 1.0};
    CHECK(lambda_const(p) == doctest::Approx(2.0).epsilon(1e-14));
    const auto r = criterion_theorem1(p);
    CHECK(r.lhs == doctest::Approx(-2.0).epsilon(1e-14));
    CHECK(r.rhs == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(r.holds);
    CHECK(t_min_theorem1(p) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(std::abs(beta_bound_theorem1(p, std::log(2.0))) <= 1e-12);
    CHECK(beta_bound_theorem1(p, 0.0) == doctest::Approx(2.0));
}

TEST_CASE("criterion is monotone in Lambda")
{
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> u(0.05, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        double c1 = u(rng), c2 = u(rng);
        BlowupParams p{1.0, 1.0, 1.0, 1.0, c1, c2};
        bool seen = false;
        for (double a = 3.0; a < 40.0; a *= 1.1) {
            p.alpha1 = p.alpha2 = a;
            const bool h = criterion_theorem1(p).holds;
            if (seen) CHECK(h);
            seen = seen || h;
        }
    }
}

TEST_CASE("t_min minimizes the two-rate bound")
{
    const BlowupParams p{6.0, 4.0, 1.0, 2.0, 0.5, 0.8};
    const double tm = t_min_theorem1(p);
    std::vector<double> t;
    for (int k = 0; k <= 4000; ++k) t.push_back(k * 1e-3);
    const auto curve = beta_bound_curve(p, t, BetaBranch::Theorem1);
    const auto it = std::min_element(curve.value.begin(), curve.value.end());
    CHECK(std::abs(curve.t[it - curve.value.begin()] - tm) <= 1e-3);
}

TEST_CASE("single-decay root agrees with bisection")
{
    const BlowupParams p{10.0, 1.0, 1.0, 1.0, 1.0, 0.0};
    const double z = z_case2(p);
    CHECK(z == doctest::Approx(0.5176).epsilon(1e-4));
    CHECK(std::abs(z - z_by_bisection(10.0, 1.0, 1.0, 1.0)) <= 1e-12);
    const auto v = criterion_case2(p);
    REQUIRE(v.z);
    CHECK(*v.z == doctest::Approx(z));
    REQUIRE(v.t_min);
    CHECK(*v.t_min == doctest::Approx(-std::log(z)));

    // t_min is a critical point of the single-decay bound
    const double h = 1e-6;
    const double d = (beta_bound_case2(p, *v.t_min + h) - beta_bound_case2(p, *v.t_min - h)) / (2.0 * h);
    CHECK(std::abs(d) <= 1e-6);
}

TEST_CASE("single-decay z lies in (0, 1] once the scan certifies")
{
    std::mt19937_64 rng(47);
    std::uniform_real_distribution<double> u(0.2, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
        BlowupParams p{u(rng), u(rng), u(rng), u(rng), u(rng), 0.0};
        if (p.alpha2 * p.alpha2 * p.m20 > 8.0 * pi) continue;
        const auto v = criterion_case2(p);
        if (v.alpha1_threshold) {
            BlowupParams q = p;
            q.alpha1 = *v.alpha1_threshold;
            const double z = z_case2(q);
            CHECK(z > 0.0);
            CHECK(z <= 1.0);
        }
    }
}

TEST_CASE("single-decay case (a) and argument checks")
{
    const BlowupParams p{1.0, 6.0, 1.0, 1.0, 1.0, 0.0};
    const auto v = criterion_case2(p);
    CHECK(v.case_a);
    CHECK(v.certified());
    CHECK_THROWS_AS(criterion_case2({1.0, 1.0, 1.0, 1.0, 1.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(criterion_theorem1({1.0, 1.0, 1.0, 1.0, 1.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(t_min_theorem1({1.0, 1.0, 1.0, 1.0, 1.0, 1.0}), std::domain_error);
    CHECK_THROWS_AS(lambda_const({1.0, 1.0, -1.0, 1.0, 0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("remark conditions list five entries")
{
    const BlowupParams small{1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
    const auto v = remark_conditions(small);
    CHECK(v.conditions.size() == 5);
    CHECK_FALSE(v.certified);

    const BlowupParams big{6.0, 1.0, 1.0, 1.0, 1.0, 1.0};
    const auto w = remark_conditions(big);
    CHECK(w.conditions[1].holds);
    CHECK(w.certified);
    const auto report = format_report(big, w);
    CHECK(report.find("condition 5") != std::string::npos);
    CHECK(report.find("blow-up certified") != std::string::npos);
}

TEST_CASE("dispatcher handles every rate pattern")
{
    CHECK(evaluate_blowup({1.0, 1.0, 1.0, 1.0, 1.0, 1.0}).conditions.size() == 5);
    CHECK(evaluate_blowup({1.0, 1.0, 1.0, 1.0, 1.0, 0.0}).conditions.size() == 3);
    CHECK(evaluate_blowup({1.0, 1.0, 1.0, 1.0, 0.0, 1.0}).conditions.size() == 3);
    const auto cons = evaluate_blowup({1.0, 1.0, 9.0 * pi, 9.0 * pi, 0.0, 0.0});
    CHECK(cons.conditions.size() == 3);
    CHECK(cons.certified);
}

TEST_CASE("second-moment check on an exact profile")
{
    // M_i(t) = 4 m_i0 t - A^2 t / (4 pi) for constant masses, where the inequality is an equality
    const BlowupParams p{1.0, 1.0, 1.0, 1.0, 0.0, 0.0};
    const double rate = 4.0 * 2.0 - 4.0 / (2.0 * pi);
    std::vector<double> t;
    std::vector<std::vector<double>> M(2);
    for (int k = 0; k <= 10; ++k) {
        t.push_back(0.1 * k);
        M[0].push_back(0.5 + 0.5 * rate * t.back());
        M[1].push_back(0.5 + 0.5 * rate * t.back());
    }
    CHECK(std::abs(second_moment_inequality_check(t, M, p)) <= 1e-12);
    for (auto& v : M[0]) v *= 1.5;
    CHECK(second_moment_inequality_check(t, M, p) > 0.1);
}
