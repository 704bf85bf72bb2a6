#include "chemoflow/blowup.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "chemoflow/jko.hpp"

namespace chemoflow {

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(double x)
{
    std::ostringstream os;
    os << std::setprecision(10) << x;
    return os.str();
}

BlowupParams swapped(const BlowupParams& p)
{
    return {p.alpha2, p.alpha1, p.m20, p.m10, p.c2, p.c1};
}

}  // namespace

void BlowupParams::validate() const
{
    for (double v : {alpha1, alpha2, m10, m20}) {
        if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("sensitivities and masses must be positive");
    }
    for (double v : {c1, c2}) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("decay rates must be nonnegative");
    }
}

double lambda_const(const BlowupParams& p)
{
    p.validate();
    const double a = p.alpha1 * p.m10 + p.alpha2 * p.m20;
    return a * a / (8.0 * kPi * (p.m10 + p.m20));
}

CriterionResult criterion_theorem1(const BlowupParams& p)
{
    p.validate();
    if (p.c1 <= 0.0 || p.c2 <= 0.0) {
        throw std::invalid_argument("two-rate criterion needs c1, c2 > 0; use criterion_case2");
    }
    CriterionResult r;
    const double c = std::min(p.c1, p.c2), C = std::max(p.c1, p.c2);
    r.lambda = lambda_const(p);
    r.lhs = 2.0 * c / C - 4.0;
    r.rhs = std::pow(r.lambda, c / (2.0 * C - c)) * (2.0 * c * r.lambda / C - 4.0 - c);
    // the equality case is a certificate, so compare with a rounding allowance
    r.holds = r.lambda > 1.0 && r.lhs <= r.rhs + 1e-12 * std::max(1.0, std::abs(r.rhs));
    return r;
}

double t_min_theorem1(const BlowupParams& p)
{
    const double L = lambda_const(p);
    if (!(L > 1.0)) throw std::domain_error("the bound has no interior minimizer when Lambda <= 1");
    const double c = std::min(p.c1, p.c2), C = std::max(p.c1, p.c2);
    if (!(2.0 * C - c > 0.0)) throw std::invalid_argument("t_min needs 2C - c > 0");
    return std::log(L) / (2.0 * C - c);
}

double beta_bound_theorem1(const BlowupParams& p, double t)
{
    p.validate();
    const double c = std::min(p.c1, p.c2), C = std::max(p.c1, p.c2);
    if (!(c > 0.0)) throw std::invalid_argument("two-rate bound needs c1, c2 > 0");
    const double S = p.m10 + p.m20;
    const double A = p.alpha1 * p.m10 + p.alpha2 * p.m20;
    return S + 4.0 * S * (-std::expm1(-c * t)) / c - A * A * (-std::expm1(-2.0 * C * t)) / (4.0 * kPi * C);
}

double beta_bound_case2(const BlowupParams& p, double t)
{
    p.validate();
    const double c = p.c1;
    if (!(c > 0.0)) throw std::invalid_argument("single-decay bound needs c1 > 0");
    const double a1 = p.alpha1, a2 = p.alpha2, m1 = p.m10, m2 = p.m20;
    const double e1 = -std::expm1(-c * t), e2 = -std::expm1(-2.0 * c * t);
    const double quad = a1 * a1 * m1 * m1 * e2 / (2.0 * c) + 2.0 * a1 * a2 * m1 * m2 * e1 / c + a2 * a2 * m2 * m2 * t;
    return m1 + m2 + 4.0 * m1 * e1 / c + 4.0 * m2 * t - quad / (2.0 * kPi);
}

double z_case2(const BlowupParams& p)
{
    p.validate();
    const double a1 = p.alpha1, a2 = p.alpha2, m2 = p.m20;
    const double disc = a1 * m2 * (a1 - a2) / (2.0 * kPi) + 1.0;
    if (disc < 0.0) throw std::domain_error("the critical-point equation has no real root");
    return 4.0 * kPi / (a1 * a1 * p.m10) * (1.0 + std::sqrt(disc) - a1 * a2 * m2 / (4.0 * kPi));
}

Case2Verdict criterion_case2(const BlowupParams& p)
{
    p.validate();
    if (p.c2 != 0.0 || !(p.c1 > 0.0)) throw std::invalid_argument("criterion_case2 needs c2 = 0 and c1 > 0");
    Case2Verdict v;
    v.lambda = lambda_const(p);
    v.case_a = p.alpha2 * p.alpha2 * p.m20 > 8.0 * kPi;

    auto evaluate_b = [](const BlowupParams& q, Case2Verdict* out) {
        const double L = lambda_const(q);
        if (!(L > 1.0) || q.alpha2 * q.alpha2 * q.m20 > 8.0 * kPi) return false;
        double z = 0.0;
        try {
            z = z_case2(q);
        } catch (const std::domain_error&) {
            return false;
        }
        if (out) out->z = z;
        if (!(z > 0.0 && z < 1.0)) return false;
        const double tm = -std::log(z) / q.c1;
        const double b = beta_bound_case2(q, tm);
        if (out) {
            out->t_min = tm;
            out->bound_at_t_min = b;
        }
        return b <= 0.0;
    };
    v.case_b = evaluate_b(p, &v);
    for (int k = 0; k <= 20; ++k) {
        BlowupParams q = p;
        q.alpha1 = p.alpha1 * std::ldexp(1.0, k);
        if (evaluate_b(q, nullptr)) {
            v.alpha1_threshold = q.alpha1;
            break;
        }
    }
    return v;
}

BlowupVerdict remark_conditions(const BlowupParams& p)
{
    p.validate();
    if (!(p.c1 > 0.0 && p.c2 > 0.0)) throw std::invalid_argument("remark conditions need c1, c2 > 0");
    BlowupVerdict v;
    v.lambda = lambda_const(p);

    const auto t1 = criterion_theorem1(p);
    Condition c1{"two-rate criterion (Lambda > 1 and rate inequality)", t1.holds,
                 "Lambda = " + fmt(t1.lambda) + ", lhs = " + fmt(t1.lhs) + ", rhs = " + fmt(t1.rhs)};
    if (t1.lambda > 1.0) {
        v.t_min = t_min_theorem1(p);
        v.bound_min = beta_bound_theorem1(p, *v.t_min);
        c1.detail += ", t_min = " + fmt(*v.t_min) + ", bound(t_min) = " + fmt(*v.bound_min);
    }
    v.conditions.push_back(c1);

    const double s1 = p.alpha1 * p.alpha1 * p.m10, s2 = p.alpha2 * p.alpha2 * p.m20;
    v.conditions.push_back({"alpha1^2 m10 > 8 pi", s1 > 8.0 * kPi, "alpha1^2 m10 = " + fmt(s1)});
    v.conditions.push_back({"alpha2^2 m20 > 8 pi", s2 > 8.0 * kPi, "alpha2^2 m20 = " + fmt(s2)});

    auto single_decay = [&](const BlowupParams& q, const std::string& name) {
        BlowupParams r = q;
        r.c2 = 0.0;
        const auto c2v = criterion_case2(r);
        Condition c{name, c2v.case_b, "Lambda = " + fmt(c2v.lambda)};
        if (c2v.z) c.detail += ", z = " + fmt(*c2v.z);
        if (c2v.bound_at_t_min) c.detail += ", bound(t_min) = " + fmt(*c2v.bound_at_t_min);
        if (c2v.alpha1_threshold) c.detail += ", first scanned alpha that certifies = " + fmt(*c2v.alpha1_threshold);
        return std::make_pair(c, c2v);
    };
    auto [c4, v4] = single_decay(p, "single-decay criterion, decay of species 2 dropped");
    auto [c5, v5] = single_decay(swapped(p), "single-decay criterion, decay of species 1 dropped");
    if (v4.z) v.z = v4.z;
    v.conditions.push_back(c4);
    v.conditions.push_back(c5);

    v.certified = std::any_of(v.conditions.begin(), v.conditions.end(), [](const Condition& c) { return c.holds; });
    return v;
}

BlowupVerdict evaluate_blowup(const BlowupParams& p)
{
    p.validate();
    if (p.c1 > 0.0 && p.c2 > 0.0) return remark_conditions(p);

    BlowupVerdict v;
    v.lambda = lambda_const(p);
    const double s1 = p.alpha1 * p.alpha1 * p.m10, s2 = p.alpha2 * p.alpha2 * p.m20;
    if (p.c1 == 0.0 && p.c2 == 0.0) {
        v.conditions.push_back({"Lambda > 1 without decay", v.lambda > 1.0, "Lambda = " + fmt(v.lambda)});
    } else {
        const bool flip = p.c1 == 0.0;
        const BlowupParams q = flip ? swapped(p) : p;
        const auto c2v = criterion_case2(q);
        Condition c{flip ? "single-decay criterion, species 2 decays" : "single-decay criterion, species 1 decays",
                    c2v.case_b, "Lambda = " + fmt(c2v.lambda)};
        if (c2v.z) c.detail += ", z = " + fmt(*c2v.z);
        if (c2v.bound_at_t_min) c.detail += ", bound(t_min) = " + fmt(*c2v.bound_at_t_min);
        if (c2v.alpha1_threshold) c.detail += ", first scanned alpha that certifies = " + fmt(*c2v.alpha1_threshold);
        v.z = c2v.z;
        v.t_min = c2v.t_min;
        v.bound_min = c2v.bound_at_t_min;
        v.conditions.push_back(c);
    }
    v.conditions.push_back({"alpha1^2 m10 > 8 pi", s1 > 8.0 * kPi, "alpha1^2 m10 = " + fmt(s1)});
    v.conditions.push_back({"alpha2^2 m20 > 8 pi", s2 > 8.0 * kPi, "alpha2^2 m20 = " + fmt(s2)});
    v.certified = std::any_of(v.conditions.begin(), v.conditions.end(), [](const Condition& c) { return c.holds; });
    return v;
}

BetaCurve beta_bound_curve(const BlowupParams& p, std::span<const double> t_grid, BetaBranch branch)
{
    BetaCurve curve;
    for (double t : t_grid) {
        const double b = branch == BetaBranch::Theorem1 ? beta_bound_theorem1(p, t) : beta_bound_case2(p, t);
        curve.t.push_back(t);
        curve.value.push_back(b);
        if (!curve.first_nonpositive && b <= 0.0) curve.first_nonpositive = t;
    }
    return curve;
}

double second_moment_inequality_check(std::span<const double> times,
                                      const std::vector<std::vector<double>>& second_moments,
                                      const BlowupParams& p)
{
    p.validate();
    if (second_moments.size() != 2) throw std::invalid_argument("second-moment check needs two species");
    const std::size_t K = times.size();
    for (const auto& s : second_moments) {
        if (s.size() != K) throw std::invalid_argument("second-moment series length mismatch");
    }
    if (K < 2) return 0.0;
    const double rates[2] = {p.c1, p.c2};
    const double m0[2] = {p.m10, p.m20};
    const double alpha[2] = {p.alpha1, p.alpha2};

    auto weighted = [&](std::size_t i, std::size_t k) { return std::exp(rates[i] * times[k]) * second_moments[i][k]; };
    double worst = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        const std::size_t a = k == 0 ? 0 : k - 1;
        const std::size_t b = k + 1 == K ? k : k + 1;
        double lhs = 0.0, mass = 0.0, drift = 0.0;
        for (std::size_t i = 0; i < 2; ++i) {
            const double deriv = (weighted(i, b) - weighted(i, a)) / (times[b] - times[a]);
            lhs += std::exp(-rates[i] * times[k]) * deriv;
            const double mi = m0[i] * std::exp(-rates[i] * times[k]);
            mass += mi;
            drift += alpha[i] * mi;
        }
        const double first = 4.0 * mass, second = drift * drift / (2.0 * kPi);
        const double violation = (lhs - (first - second)) / (std::abs(first) + std::abs(second));
        worst = std::max(worst, violation);
    }
    return worst;
}

double second_moment_inequality_check(const Trajectory& traj, const BlowupParams& p)
{
    std::vector<double> times;
    std::vector<std::vector<double>> moments(2);
    for (const auto& r : traj.records) {
        if (r.second_moments.size() != 2) throw std::invalid_argument("second-moment check needs two species");
        times.push_back(r.t);
        moments[0].push_back(r.second_moments[0]);
        moments[1].push_back(r.second_moments[1]);
    }
    return second_moment_inequality_check(times, moments, p);
}

std::string format_report(const BlowupParams& p, const BlowupVerdict& v)
{
    std::ostringstream os;
    os << "parameters: alpha1 = " << fmt(p.alpha1) << ", alpha2 = " << fmt(p.alpha2) << ", m10 = " << fmt(p.m10)
       << ", m20 = " << fmt(p.m20) << ", c1 = " << fmt(p.c1) << ", c2 = " << fmt(p.c2) << '\n';
    os << "Lambda = " << fmt(v.lambda) << '\n';
    if (v.t_min) os << "t_min = " << fmt(*v.t_min) << '\n';
    if (v.bound_min) os << "second-moment bound at t_min = " << fmt(*v.bound_min) << '\n';
    if (v.z) os << "z = " << fmt(*v.z) << '\n';
    for (std::size_t i = 0; i < v.conditions.size(); ++i) {
        const auto& c = v.conditions[i];
        os << "condition " << i + 1 << ": " << (c.holds ? "true " : "false") << "  " << c.name << "  [" << c.detail
           << "]\n";
    }
    os << "note: the single-decay bound uses alpha2^2 m20^2 in its last quadratic term\n";
    os << "verdict: " << (v.certified ? "blow-up certified" : "inconclusive") << '\n';
    return os.str();
}

}  // namespace chemoflow
