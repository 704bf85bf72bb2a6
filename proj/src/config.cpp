#include "chemoflow/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace chemoflow {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const KeyValueConfig& cfg, const std::string& key, const std::string& msg)
{
    throw ConfigError(key + " " + msg, cfg.line_of(key));
}

std::string species_key(std::size_t i, const std::string& name)
{
    return "species." + std::to_string(i) + "." + name;
}

double center_radius(const Grid& g, std::size_t j)
{
    return std::sqrt(g.center_norm2(j));
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& is)
{
    KeyValueConfig cfg;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(is, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key = value, got '" + line + "'", lineno);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key", lineno);
        if (value.empty()) throw ConfigError("empty value for '" + key + "'", lineno);
        if (cfg.entries_.count(key)) {
            throw ConfigError("duplicate key '" + key + "' (first on line " +
                                  std::to_string(cfg.entries_[key].line) + ")",
                              lineno);
        }
        cfg.entries_[key] = {value, lineno};
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'", 0);
    return parse(in);
}

std::size_t KeyValueConfig::line_of(const std::string& key) const
{
    auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
}

bool KeyValueConfig::has(const std::string& key) const
{
    return entries_.count(key) != 0;
}

void KeyValueConfig::set(const std::string& key, const std::string& value)
{
    entries_[key] = {value, 0};
}

const KeyValueConfig::Entry* KeyValueConfig::find(const std::string& key) const
{
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::optional<std::string>& fallback) const
{
    if (const auto* e = find(key)) return e->value;
    if (fallback) return *fallback;
    throw ConfigError("missing key '" + key + "'", 0);
}

double KeyValueConfig::get_double(const std::string& key, const std::optional<double>& fallback) const
{
    const auto* e = find(key);
    if (!e) {
        if (fallback) return *fallback;
        throw ConfigError("missing key '" + key + "'", 0);
    }
    double v = 0.0;
    const char* last = e->value.data() + e->value.size();
    auto [ptr, ec] = std::from_chars(e->value.data(), last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
        throw ConfigError("'" + key + "' expects a finite number, got '" + e->value + "'", e->line);
    }
    return v;
}

std::size_t KeyValueConfig::get_size(const std::string& key, const std::optional<std::size_t>& fallback) const
{
    const auto* e = find(key);
    if (!e) {
        if (fallback) return *fallback;
        throw ConfigError("missing key '" + key + "'", 0);
    }
    std::size_t v = 0;
    const char* last = e->value.data() + e->value.size();
    auto [ptr, ec] = std::from_chars(e->value.data(), last, v);
    if (ec != std::errc() || ptr != last) {
        throw ConfigError("'" + key + "' expects a nonnegative integer, got '" + e->value + "'", e->line);
    }
    return v;
}

bool KeyValueConfig::get_bool(const std::string& key, const std::optional<bool>& fallback) const
{
    const auto* e = find(key);
    if (!e) {
        if (fallback) return *fallback;
        throw ConfigError("missing key '" + key + "'", 0);
    }
    if (e->value == "true" || e->value == "1" || e->value == "yes") return true;
    if (e->value == "false" || e->value == "0" || e->value == "no") return false;
    throw ConfigError("'" + key + "' expects true or false, got '" + e->value + "'", e->line);
}

void KeyValueConfig::reject_unused() const
{
    for (const auto& [key, e] : entries_) {
        if (!used_.count(key)) throw ConfigError("unknown key '" + key + "'", e.line);
    }
}

RunSetup build_run_setup(const KeyValueConfig& cfg)
{
    RunSetup setup;
    setup.seed = cfg.get_size("seed", 0);

    GridPtr grid;
    const std::string kind = cfg.get_string("grid.kind", std::string("radial"));
    if (kind == "radial") {
        const std::size_t n = cfg.get_size("grid.n", 64);
        const std::string spacing = cfg.get_string("grid.spacing", std::string("uniform"));
        RadialSpacing sp;
        if (spacing == "uniform") sp = RadialSpacing::UniformRadius;
        else if (spacing == "equal_area") sp = RadialSpacing::EqualArea;
        else bad(cfg, "grid.spacing", "must be uniform or equal_area");
        if (n < 2) bad(cfg, "grid.n", "must be at least 2");
        grid = make_radial_grid(n, sp);
    } else if (kind == "box") {
        const std::size_t nx = cfg.get_size("grid.nx", 16), ny = cfg.get_size("grid.ny", 16);
        const double L = cfg.get_double("grid.L", 1.0);
        if (nx < 2 || ny < 2) bad(cfg, nx < 2 ? "grid.nx" : "grid.ny", "must be at least 2");
        if (!(L > 0.0)) bad(cfg, "grid.L", "must be positive");
        grid = make_box_grid(nx, ny, L);
    } else {
        bad(cfg, "grid.kind", "must be radial or box, got '" + kind + "'");
    }

    const std::size_t N = cfg.get_size("species.count", 1);
    if (N == 0) bad(cfg, "species.count", "must be positive");
    std::vector<double> alphas;
    std::vector<DensityField> fields;
    for (std::size_t i = 1; i <= N; ++i) {
        alphas.push_back(cfg.get_double(species_key(i, "alpha"), 1.0));
        if (alphas.back() < 0.0) bad(cfg, species_key(i, "alpha"), "must be nonnegative");
        const std::string profile = cfg.get_string(species_key(i, "profile"), std::string("uniform"));
        std::vector<double> values(grid->size());
        if (profile == "uniform") {
            std::fill(values.begin(), values.end(), 1.0);
        } else if (profile == "gaussian") {
            const double r0 = cfg.get_double(species_key(i, "r0"), 0.0);
            const double sigma = cfg.get_double(species_key(i, "sigma"), 0.25);
            if (!(sigma > 0.0)) bad(cfg, species_key(i, "sigma"), "must be positive");
            for (std::size_t j = 0; j < values.size(); ++j) {
                const double d = center_radius(*grid, j) - r0;
                values[j] = std::exp(-d * d / (2.0 * sigma * sigma));
            }
        } else if (profile == "file") {
            const std::string path = cfg.get_string(species_key(i, "file"));
            std::ifstream in(path);
            if (!in) bad(cfg, species_key(i, "file"), "names a file that cannot be opened: '" + path + "'");
            const auto f = read_field_csv(in, grid);
            values.assign(f.values().begin(), f.values().end());
        } else {
            bad(cfg, species_key(i, "profile"), "must be uniform, gaussian or file");
        }
        const double noise = cfg.get_double(species_key(i, "noise"), 0.0);
        if (noise < 0.0 || noise >= 1.0) bad(cfg, species_key(i, "noise"), "must lie in [0, 1)");
        if (noise > 0.0) {
            std::mt19937_64 rng(setup.seed * 1000003ULL + i);
            std::uniform_real_distribution<double> u(-1.0, 1.0);
            for (double& v : values) v *= 1.0 + noise * u(rng);
        }
        DensityField f(grid, std::move(values));
        f.validate();
        if (!(mass(f) > 0.0)) bad(cfg, species_key(i, "profile"), "gives zero initial mass");
        fields.push_back(std::move(f));
    }
    setup.initial = SpeciesState(std::move(fields), alphas);
    for (std::size_t i = 1; i <= N; ++i) {
        if (cfg.has(species_key(i, "mass")) || cfg.get_string(species_key(i, "profile"), std::string("uniform")) != "file") {
            const double m = cfg.get_double(species_key(i, "mass"), 1.0);
            if (!(m > 0.0)) bad(cfg, species_key(i, "mass"), "must be positive");
            setup.initial.renormalize(i - 1, m);
        }
    }

    auto& s = setup.scheme;
    const std::string growth = cfg.get_string("growth.kind", std::string("none"));
    std::vector<double> rates;
    if (growth != "none") {
        for (std::size_t i = 1; i <= N; ++i) {
            rates.push_back(cfg.get_double("growth." + std::to_string(i) + ".rate"));
        }
    }
    if (growth == "none") s.growth = GrowthSpec::none();
    else if (growth == "birth") s.growth = GrowthSpec::birth(rates);
    else if (growth == "death") s.growth = GrowthSpec::death(rates);
    else bad(cfg, "growth.kind", "must be none, birth or death");
    s.growth.validate(N);

    s.tau = cfg.get_double("scheme.tau", 1e-2);
    s.T = cfg.get_double("scheme.T", 0.1);
    s.lambda = cfg.get_double("scheme.lambda", 2.0);
    s.step.el_tol = cfg.get_double("scheme.el_tol", s.step.el_tol);
    s.step.el_accept = cfg.get_double("scheme.el_accept", s.step.el_accept);
    s.step.max_iterations = cfg.get_size("scheme.max_newton", s.step.max_iterations);
    s.step.box_eps = cfg.get_double("scheme.eps", s.step.box_eps);
    s.override_admissibility = cfg.get_bool("scheme.override", false);
    if (!(s.tau > 0.0) || !(s.T > 0.0)) bad(cfg, s.tau > 0.0 ? "scheme.T" : "scheme.tau", "must be positive");
    if (!(s.lambda > 1.0)) bad(cfg, "scheme.lambda", "must exceed 1");
    setup.transport.box_eps = s.step.box_eps;

    auto& r = setup.reference;
    r.T = s.T;
    r.dt = cfg.get_double("reference.dt", 0.0);
    r.dt_safety = cfg.get_double("reference.dt_safety", r.dt_safety);
    r.sample_dt = cfg.get_double("reference.sample_dt", s.tau);
    if (growth == "death") r.decay_rates = rates;

    setup.out_dir = cfg.get_string("output.dir", std::string("."));
    setup.prefix = cfg.get_string("output.prefix", std::string("run"));
    setup.cadence = cfg.get_size("output.cadence", 0);
    return setup;
}

}  // namespace chemoflow
