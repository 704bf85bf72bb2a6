#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace chemoflow {

struct Trajectory;

/// Two species on the unit disk with linear decay rates c1, c2.
struct BlowupParams {
    double alpha1 = 1.0, alpha2 = 1.0;
    double m10 = 1.0, m20 = 1.0;
    double c1 = 0.0, c2 = 0.0;

    /// Throws std::invalid_argument unless alphas, masses > 0 and rates >= 0.
    void validate() const;
};

/// (alpha1 m10 + alpha2 m20)^2 / (8 pi (m10 + m20)).
double lambda_const(const BlowupParams& p);

struct CriterionResult {
    bool holds = false;
    double lambda = 0.0;
    double lhs = 0.0;  // 2c/C - 4
    double rhs = 0.0;  // Lambda^{c/(2C-c)} (2c Lambda/C - 4 - c)
};

/// Lambda > 1 and 2c/C - 4 <= Lambda^{c/(2C-c)} (2c Lambda/C - 4 - c), c = min, C = max rate.
/// Throws std::invalid_argument if a rate is zero.
CriterionResult criterion_theorem1(const BlowupParams& p);

/// ln(Lambda) / (2C - c). Throws std::domain_error if Lambda <= 1.
double t_min_theorem1(const BlowupParams& p);

/// Upper bound for the weighted second moment from the two-rate estimate.
double beta_bound_theorem1(const BlowupParams& p, double t);

/// Same bound when species 2 does not decay (c2 = 0, c1 = c > 0).
double beta_bound_case2(const BlowupParams& p, double t);

/// Root z = e^{-c t_min} of 4(m10 z + m20) = (alpha1 m10 z + alpha2 m20)^2 / (2 pi), larger branch.
double z_case2(const BlowupParams& p);

struct Case2Verdict {
    bool case_a = false;  // alpha2^2 m20 > 8 pi
    bool case_b = false;  // Lambda > 1, alpha2^2 m20 <= 8 pi and bound(t_min) <= 0
    double lambda = 0.0;
    std::optional<double> z;
    std::optional<double> t_min;
    std::optional<double> bound_at_t_min;
    /// Smallest alpha1 * 2^k (k = 0..20) for which case (b) holds, if any.
    std::optional<double> alpha1_threshold;
    bool certified() const { return case_a || case_b; }
};

/// Requires c2 == 0 and c1 > 0.
Case2Verdict criterion_case2(const BlowupParams& p);

struct Condition {
    std::string name;
    bool holds = false;
    std::string detail;
};

struct BlowupVerdict {
    std::vector<Condition> conditions;  // five entries
    double lambda = 0.0;
    std::optional<double> t_min;
    std::optional<double> z;
    std::optional<double> bound_min;
    bool certified = false;
};

/// The five sufficient conditions: the two-rate criterion, alpha1^2 m10 > 8 pi,
/// alpha2^2 m20 > 8 pi, and the single-decay criterion with either decay dropped.
/// Requires c1, c2 > 0.
BlowupVerdict remark_conditions(const BlowupParams& p);

/// Dispatch on the rates: both positive gives remark_conditions; one zero rate
/// gives the single-decay criterion (species relabelled so the decaying one is
/// first) plus the two 8 pi conditions; no decay gives Lambda > 1 alone.
BlowupVerdict evaluate_blowup(const BlowupParams& p);

enum class BetaBranch { Theorem1, Case2 };

struct BetaCurve {
    std::vector<double> t;
    std::vector<double> value;
    std::optional<double> first_nonpositive;  // upper estimate of the maximal time
};

BetaCurve beta_bound_curve(const BlowupParams& p, std::span<const double> t_grid, BetaBranch branch);

/// Largest relative violation of
/// e^{-c1 t} M1' + e^{-c2 t} M2' <= 4(m1(t) + m2(t)) - (alpha1 m1(t) + alpha2 m2(t))^2 / (2 pi),
/// M_i = e^{c_i t} int |x|^2 rho_i, m_i(t) = m_i0 e^{-c_i t}. Derivatives by central differences
/// (one-sided at the ends); the violation is divided by the sum of the magnitudes of the right-hand terms.
double second_moment_inequality_check(std::span<const double> times,
                                      const std::vector<std::vector<double>>& second_moments,
                                      const BlowupParams& p);
double second_moment_inequality_check(const Trajectory& traj, const BlowupParams& p);

/// Plain-text report of a verdict, one condition per line.
std::string format_report(const BlowupParams& p, const BlowupVerdict& v);

}  // namespace chemoflow
