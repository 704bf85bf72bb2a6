#include "chemoflow/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "chemoflow/blowup.hpp"
#include "chemoflow/config.hpp"
#include "chemoflow/errors.hpp"
#include "chemoflow/oracle.hpp"
#include "chemoflow/trajectory_io.hpp"

namespace chemoflow {

namespace {

namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kNumerical = 2;

struct RunFlags {
    std::string config;
    std::string out;
    std::vector<std::string> overrides;  // key=value
    std::optional<double> tau, T;
    std::optional<std::size_t> n, seed;
};

void add_run_flags(CLI::App* sub, RunFlags& f)
{
    sub->add_option("--config", f.config, "key=value run configuration")->required();
    sub->add_option("--out", f.out, "output directory (overrides output.dir)");
    sub->add_option("--set", f.overrides, "extra key=value override, repeatable");
    sub->add_option("--tau", f.tau, "overrides scheme.tau");
    sub->add_option("--T", f.T, "overrides scheme.T");
    sub->add_option("--n", f.n, "overrides grid.n");
    sub->add_option("--seed", f.seed, "overrides seed");
}

std::string text(double x)
{
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

KeyValueConfig load_with_overrides(const RunFlags& f)
{
    auto cfg = KeyValueConfig::load(f.config);
    for (const auto& kv : f.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + kv + "'", 0);
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (f.tau) cfg.set("scheme.tau", text(*f.tau));
    if (f.T) cfg.set("scheme.T", text(*f.T));
    if (f.n) cfg.set("grid.n", std::to_string(*f.n));
    if (f.seed) cfg.set("seed", std::to_string(*f.seed));
    if (!f.out.empty()) cfg.set("output.dir", f.out);
    return cfg;
}

std::ofstream open_out(const fs::path& p)
{
    std::ofstream os(p);
    if (!os) throw std::invalid_argument("cannot write '" + p.string() + "'");
    return os;
}

void write_outputs(const RunSetup& setup, const Trajectory& traj, const std::string& tag, std::ostream& out)
{
    const fs::path dir(setup.out_dir);
    fs::create_directories(dir);
    const std::string stem = setup.prefix + "_" + tag;
    {
        auto os = open_out(dir / (stem + ".csv"));
        write_trajectory_csv(os, traj);
    }
    {
        auto os = open_out(dir / (stem + "_summary.txt"));
        write_summary(os, traj);
    }
    for (std::size_t i = 0; i < traj.final_state.species(); ++i) {
        auto os = open_out(dir / (stem + "_final_" + std::to_string(i + 1) + ".csv"));
        write_field_csv(os, traj.final_state.field(i));
    }
    if (setup.cadence > 0) {
        for (std::size_t k = 0; k < traj.states.size(); k += setup.cadence) {
            for (std::size_t i = 0; i < traj.states[k].species(); ++i) {
                auto os = open_out(dir / (stem + "_k" + std::to_string(k) + "_" + std::to_string(i + 1) + ".csv"));
                write_field_csv(os, traj.states[k].field(i));
            }
        }
    }
    write_summary(out, traj);
    out << "wrote " << (dir / (stem + ".csv")).string() << '\n';
}

int simulate(const RunFlags& f, std::ostream& out, std::ostream& err)
{
    const auto cfg = load_with_overrides(f);
    auto setup = build_run_setup(cfg);
    cfg.reject_unused();
    setup.scheme.keep_states = setup.cadence > 0;
    const auto traj = run_scheme(setup.scheme, setup.initial);
    write_outputs(setup, traj, "jko", out);
    if (!traj.completed) {
        err << "numerical failure: " << traj.failure << '\n';
        return kNumerical;
    }
    return kOk;
}

int reference(const RunFlags& f, std::ostream& out, std::ostream& err)
{
    const auto cfg = load_with_overrides(f);
    auto setup = build_run_setup(cfg);
    cfg.reject_unused();
    if (setup.scheme.growth.is_birth()) throw std::invalid_argument("the reference solver supports decay only");
    if (!setup.initial.grid().is_radial()) throw std::invalid_argument("the reference solver needs grid.kind = radial");
    setup.reference.keep_states = setup.cadence > 0;
    const auto traj = run_reference(setup.reference, setup.initial);
    write_outputs(setup, traj, "reference", out);
    if (!traj.completed) {
        err << "numerical failure: " << traj.failure << '\n';
        return kNumerical;
    }
    return kOk;
}

struct BlowupFlags {
    double a1 = 1.0, a2 = 1.0, m1 = 1.0, m2 = 1.0, c1 = 0.0, c2 = 0.0;
    std::string out;
};

int blowup(const BlowupFlags& f, std::ostream& out)
{
    const BlowupParams p{f.a1, f.a2, f.m1, f.m2, f.c1, f.c2};
    const auto verdict = evaluate_blowup(p);
    const std::string report = format_report(p, verdict);
    out << report;
    if (!f.out.empty()) {
        fs::create_directories(f.out);
        auto os = open_out(fs::path(f.out) / "blowup_report.txt");
        os << report;
    }
    return kOk;
}

struct CompareFlags {
    std::string a, b;
};

std::vector<StepRecord> load_records(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open '" + path + "'");
    try {
        return read_trajectory_csv(in);
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

int compare(const CompareFlags& f, std::ostream& out)
{
    const auto a = load_records(f.a), b = load_records(f.b);
    const auto d = compare_records(a, b);
    out << std::setprecision(17);
    out << "rows = " << d.rows << '\n';
    if (a.size() != b.size()) out << "note: row counts differ (" << a.size() << " vs " << b.size() << ")\n";
    out << "mass_l1 = " << d.mass_l1 << "\nmass_linf = " << d.mass_linf << "\nlinf = " << d.linf
        << "\nentropy = " << d.entropy << "\nfree_energy = " << d.free_energy << "\nsecond_moment = " << d.second_moment
        << '\n';
    return kOk;
}

struct SweepFlags {
    std::string a1 = "1", a2 = "1", m1 = "1", m2 = "1", c1 = "0", c2 = "0";
    std::string out;
};

// "v1,v2,..." or "lo:hi:count"
std::vector<double> parse_values(const std::string& name, const std::string& spec)
{
    auto number = [&](const std::string& s) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw std::invalid_argument("--" + name + ": bad number '" + s + "'");
        }
    };
    std::vector<double> out;
    if (std::count(spec.begin(), spec.end(), ':') == 2) {
        const auto p1 = spec.find(':'), p2 = spec.rfind(':');
        const double lo = number(spec.substr(0, p1)), hi = number(spec.substr(p1 + 1, p2 - p1 - 1));
        const double cnt = number(spec.substr(p2 + 1));
        if (!(cnt >= 1.0) || cnt != std::floor(cnt)) throw std::invalid_argument("--" + name + ": count must be a positive integer");
        const auto n = static_cast<std::size_t>(cnt);
        for (std::size_t k = 0; k < n; ++k) out.push_back(n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1));
        return out;
    }
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(number(item));
    if (out.empty()) throw std::invalid_argument("--" + name + ": no values");
    return out;
}

std::size_t thread_count()
{
    if (const char* env = std::getenv("CHEMOFLOW_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

int sweep(const SweepFlags& f, std::ostream& out)
{
    const auto A1 = parse_values("a1", f.a1), A2 = parse_values("a2", f.a2), M1 = parse_values("m1", f.m1),
               M2 = parse_values("m2", f.m2), C1 = parse_values("c1", f.c1), C2 = parse_values("c2", f.c2);
    std::vector<BlowupParams> tuples;
    for (double a1 : A1)
        for (double a2 : A2)
            for (double m1 : M1)
                for (double m2 : M2)
                    for (double c1 : C1)
                        for (double c2 : C2) tuples.push_back({a1, a2, m1, m2, c1, c2});
    for (const auto& p : tuples) p.validate();

    std::vector<std::string> rows(tuples.size());
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            const auto& p = tuples[k];
            const auto v = evaluate_blowup(p);
            std::ostringstream os;
            os << std::setprecision(17) << p.alpha1 << ',' << p.alpha2 << ',' << p.m10 << ',' << p.m20 << ','
               << p.c1 << ',' << p.c2 << ',' << v.lambda;
            for (const auto& c : v.conditions) os << ',' << (c.holds ? 1 : 0);
            // pad to five condition columns for the rate cases with fewer conditions
            for (std::size_t pad = v.conditions.size(); pad < 5; ++pad) os << ',';
            os << ',' << (v.certified ? 1 : 0);
            rows[k] = os.str();
        }
    };
    const std::size_t threads = std::min(thread_count(), std::max<std::size_t>(tuples.size(), 1));
    const std::size_t chunk = (tuples.size() + threads - 1) / threads;
    std::vector<std::future<void>> jobs;
    for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t b = t * chunk, e = std::min(tuples.size(), b + chunk);
        if (b < e) jobs.push_back(std::async(std::launch::async, work, b, e));
    }
    for (auto& j : jobs) j.get();

    std::ofstream file;
    std::ostream* os = &out;
    if (!f.out.empty()) {
        const fs::path p(f.out);
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        file = open_out(p);
        os = &file;
    }
    *os << "alpha1,alpha2,m10,m20,c1,c2,lambda,cond1,cond2,cond3,cond4,cond5,certified\n";
    for (const auto& r : rows) *os << r << '\n';
    if (os != &out) out << "wrote " << tuples.size() << " rows to " << f.out << '\n';
    return kOk;
}

}  // namespace

int run_command(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"multi-species chemotaxis simulator and blow-up toolkit", "chemoflow"};
    app.require_subcommand(1);

    RunFlags sim_flags, ref_flags;
    auto* sim = app.add_subcommand("simulate", "run the minimizing-movement scheme");
    add_run_flags(sim, sim_flags);
    auto* ref = app.add_subcommand("reference", "run the finite-volume reference solver");
    add_run_flags(ref, ref_flags);

    BlowupFlags bf;
    auto* blw = app.add_subcommand("blowup", "evaluate the blow-up criteria");
    blw->add_option("--a1", bf.a1, "alpha1");
    blw->add_option("--a2", bf.a2, "alpha2");
    blw->add_option("--m1", bf.m1, "initial mass of species 1");
    blw->add_option("--m2", bf.m2, "initial mass of species 2");
    blw->add_option("--c1", bf.c1, "decay rate of species 1");
    blw->add_option("--c2", bf.c2, "decay rate of species 2");
    blw->add_option("--out", bf.out, "directory for blowup_report.txt");

    CompareFlags cf;
    auto* cmp = app.add_subcommand("compare", "compare two trajectory CSV files");
    cmp->add_option("a", cf.a, "first trajectory CSV")->required();
    cmp->add_option("b", cf.b, "second trajectory CSV")->required();

    SweepFlags sf;
    auto* swp = app.add_subcommand("sweep", "evaluate the blow-up criteria over a parameter grid");
    swp->add_option("--a1", sf.a1, "values: v1,v2,... or lo:hi:count");
    swp->add_option("--a2", sf.a2, "values for alpha2");
    swp->add_option("--m1", sf.m1, "values for m10");
    swp->add_option("--m2", sf.m2, "values for m20");
    swp->add_option("--c1", sf.c1, "values for c1");
    swp->add_option("--c2", sf.c2, "values for c2");
    swp->add_option("--out", sf.out, "region CSV path (stdout when omitted)");

    std::vector<const char*> raw;
    for (const auto& a : argv) raw.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(raw.size()), raw.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kOk : kValidation;
    }

    try {
        if (*sim) return simulate(sim_flags, out, err);
        if (*ref) return reference(ref_flags, out, err);
        if (*blw) return blowup(bf, out);
        if (*cmp) return compare(cf, out);
        if (*swp) return sweep(sf, out);
    } catch (const NumericalFailure& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const StepRejected& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::domain_error& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    }
    return kValidation;
}

}  // namespace chemoflow
