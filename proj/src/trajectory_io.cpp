#include "chemoflow/trajectory_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <limits>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace chemoflow {

namespace {

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, std::size_t line)
{
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        // from_chars rejects inf/nan spellings on some libraries
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        throw std::invalid_argument("line " + std::to_string(line) + ": bad number '" + s + "'");
    }
    return v;
}

std::size_t species_in_header(const std::vector<std::string>& cols)
{
    return static_cast<std::size_t>(std::count_if(cols.begin(), cols.end(),
                                                  [](const std::string& c) { return c.rfind("mass_", 0) == 0; }));
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const Trajectory& traj)
{
    const std::size_t N = traj.records.empty() ? 0 : traj.records.front().masses.size();
    os << "k,t";
    for (std::size_t i = 1; i <= N; ++i) os << ",mass_" << i;
    os << ",linf,entropy,free_energy,phi_decrease,w2_increment,el_residual";
    for (std::size_t i = 1; i <= N; ++i) os << ",second_moment_" << i;
    os << ",bound_slack\n";

    const auto old_flags = os.flags();
    const auto old_prec = os.precision();
    os << std::setprecision(17);
    for (const auto& r : traj.records) {
        os << r.k << ',' << r.t;
        for (double m : r.masses) os << ',' << m;
        os << ',' << r.linf << ',' << r.entropy << ',' << r.free_energy << ',' << r.phi_decrease << ','
           << r.w2_increment << ',' << r.el_residual;
        for (double m : r.second_moments) os << ',' << m;
        os << ',' << r.bound_slack << '\n';
    }
    os.flags(old_flags);
    os.precision(old_prec);
}

std::vector<StepRecord> read_trajectory_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("line 1: missing header");
    const auto header = split(line);
    const std::size_t N = species_in_header(header);
    const std::size_t expected = 2 * N + 9;
    if (header.size() != expected || header[0] != "k" || header[1] != "t" || header.back() != "bound_slack") {
        throw std::invalid_argument("line 1: unexpected trajectory header");
    }

    std::vector<StepRecord> records;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cols = split(line);
        if (cols.size() != expected) {
            throw std::invalid_argument("line " + std::to_string(lineno) + ": expected " + std::to_string(expected) +
                                        " columns, found " + std::to_string(cols.size()));
        }
        StepRecord r;
        std::size_t c = 0;
        const double k = parse_double(cols[c++], lineno);
        if (!(k >= 0.0) || k != std::floor(k)) {
            throw std::invalid_argument("line " + std::to_string(lineno) + ": step index must be a nonnegative integer");
        }
        r.k = static_cast<std::size_t>(k);
        r.t = parse_double(cols[c++], lineno);
        for (std::size_t i = 0; i < N; ++i) r.masses.push_back(parse_double(cols[c++], lineno));
        r.linf = parse_double(cols[c++], lineno);
        r.entropy = parse_double(cols[c++], lineno);
        r.free_energy = parse_double(cols[c++], lineno);
        r.phi_decrease = parse_double(cols[c++], lineno);
        r.w2_increment = parse_double(cols[c++], lineno);
        r.el_residual = parse_double(cols[c++], lineno);
        for (std::size_t i = 0; i < N; ++i) r.second_moments.push_back(parse_double(cols[c++], lineno));
        r.bound_slack = parse_double(cols[c++], lineno);
        records.push_back(std::move(r));
    }
    return records;
}

void write_summary(std::ostream& os, const Trajectory& traj)
{
    const auto old_prec = os.precision();
    os << std::setprecision(12);
    const auto& c = traj.config;
    const auto& a = traj.admissibility;
    os << "tau = " << c.tau << "\nT = " << c.T << "\nlambda = " << c.lambda << '\n';
    os << "steps = " << (traj.records.empty() ? 0 : traj.records.size() - 1) << '\n';
    os << "chi = " << a.chi << "\nk0 = " << a.k0 << "\neps0 = " << a.eps0 << "\nmax_horizon = " << a.max_horizon
       << "\ntau_limit = " << a.tau_limit << '\n';
    os << "admissible = " << (a.accepted ? "yes" : "no") << "\nadmissibility = " << a.reason << '\n';
    os << "sum_w2 = " << traj.sum_w2 << "\nc_bar = " << traj.c_bar << "\nc_T = " << traj.c_T << '\n';
    double worst_el = 0.0, worst_slack = std::numeric_limits<double>::infinity();
    for (const auto& r : traj.records) {
        worst_el = std::max(worst_el, r.el_residual);
        worst_slack = std::min(worst_slack, r.bound_slack);
    }
    os << "max_el_residual = " << worst_el << "\nmin_bound_slack = " << worst_slack << '\n';
    os << "completed = " << (traj.completed ? "yes" : "no") << '\n';
    if (!traj.failure.empty()) os << "failure = " << traj.failure << '\n';
    os.precision(old_prec);
}

TrajectoryDelta compare_records(const std::vector<StepRecord>& a, const std::vector<StepRecord>& b)
{
    TrajectoryDelta d;
    const std::size_t rows = std::min(a.size(), b.size());
    d.rows = rows;
    for (std::size_t k = 0; k < rows; ++k) {
        const auto& x = a[k];
        const auto& y = b[k];
        if (x.masses.size() != y.masses.size()) throw std::invalid_argument("trajectories have different species counts");
        double l1 = 0.0;
        for (std::size_t i = 0; i < x.masses.size(); ++i) {
            const double dm = std::abs(x.masses[i] - y.masses[i]);
            l1 += dm;
            d.mass_linf = std::max(d.mass_linf, dm);
            d.second_moment = std::max(d.second_moment, std::abs(x.second_moments[i] - y.second_moments[i]));
        }
        d.mass_l1 = std::max(d.mass_l1, l1);
        d.linf = std::max(d.linf, std::abs(x.linf - y.linf));
        d.free_energy = std::max(d.free_energy, std::abs(x.free_energy - y.free_energy));
        d.entropy = std::max(d.entropy, std::abs(x.entropy - y.entropy));
    }
    return d;
}

}  // namespace chemoflow
