#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "chemoflow/fields.hpp"
#include "chemoflow/jko.hpp"
#include "chemoflow/oracle.hpp"

namespace chemoflow {

/// Thrown for malformed or inconsistent configuration. `line` is 0 when the
/// problem is not tied to one line (a missing key, say).
class ConfigError : public std::invalid_argument {
public:
    ConfigError(const std::string& what, std::size_t line)
        : std::invalid_argument(line ? "config line " + std::to_string(line) + ": " + what : "config: " + what),
          line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Flat key=value document. '#' starts a comment; blank lines are ignored.
class KeyValueConfig {
public:
    static KeyValueConfig parse(std::istream& is);
    static KeyValueConfig load(const std::string& path);

    bool has(const std::string& key) const;
    /// Line of `key` in the source text, 0 when absent or set from the command line.
    std::size_t line_of(const std::string& key) const;
    void set(const std::string& key, const std::string& value);  // command-line overrides, line 0

    std::string get_string(const std::string& key, const std::optional<std::string>& fallback = std::nullopt) const;
    double get_double(const std::string& key, const std::optional<double>& fallback = std::nullopt) const;
    std::size_t get_size(const std::string& key, const std::optional<std::size_t>& fallback = std::nullopt) const;
    bool get_bool(const std::string& key, const std::optional<bool>& fallback = std::nullopt) const;

    /// Throws ConfigError on the first key that was never read.
    void reject_unused() const;

private:
    struct Entry {
        std::string value;
        std::size_t line = 0;
    };
    const Entry* find(const std::string& key) const;

    std::map<std::string, Entry> entries_;
    mutable std::set<std::string> used_;
};

/// Everything a simulate or reference run needs, resolved from a config.
struct RunSetup {
    SpeciesState initial;
    SchemeConfig scheme;
    ReferenceConfig reference;
    TransportOptions transport;
    std::string out_dir = ".";
    std::string prefix = "run";
    std::size_t cadence = 1;  // write a field snapshot every `cadence` records; 0 disables
    std::uint64_t seed = 0;
};

/// Keys: grid.kind (radial|box), grid.n, grid.spacing (uniform|equal_area),
/// grid.nx, grid.ny, grid.L; species.count, species.<i>.alpha,
/// species.<i>.profile (uniform|gaussian|file), species.<i>.mass, .r0, .sigma,
/// .file, .noise; growth.kind (none|birth|death), growth.<i>.rate;
/// scheme.tau, .T, .lambda, .el_tol, .el_accept, .max_newton, .override, .eps;
/// reference.dt, .dt_safety, .sample_dt; output.dir, .prefix, .cadence; seed.
RunSetup build_run_setup(const KeyValueConfig& cfg);

}  // namespace chemoflow
