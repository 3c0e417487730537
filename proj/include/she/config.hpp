#pragma once

#include "she/kernels.hpp"
#include "she/simulate.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace she {

/// Raw INI content: section name -> key -> value, all strings. Repeated
/// section headers merge; duplicate keys within a section are rejected.
struct ParsedConfig {
    std::map<std::string, std::map<std::string, std::string>> sections;

    bool has(const std::string& section) const;
    bool has(const std::string& section, const std::string& key) const;
    /// Value lookup; ConfigError when the section or key is absent.
    const std::string& at(const std::string& section,
                          const std::string& key) const;
};

/// Parses INI-like text: `[section]` headers, `key = value` lines, `#` and
/// `;` full-line comments, blank lines ignored, surrounding whitespace
/// trimmed. Throws ConfigError on malformed lines, keys before the first
/// section header, or duplicate keys within a section.
ParsedConfig parse_ini(std::istream& is);

/// parse_ini on the contents of a file; ConfigError when unreadable.
ParsedConfig parse_ini_file(const std::string& path);

/// One second-moment evaluation point (t, x, x').
struct MomentTarget {
    double t = 0.0;
    std::vector<double> x, xp;
};

/// Fully validated run parameters assembled from a parsed config file.
/// Every field has a default; `[kernel]` is the only required section.
struct RunConfig {
    CorrelationKernel kernel = CorrelationKernel::constant(1.0, 1);
    HeatParams p{1.0, 1};
    InitialMeasure mu = InitialMeasure::lebesgue(1.0);

    // [grid] time grid for kernel tables
    double t_min = 1e-3;
    double t_max = 1e2;
    int n_points = 200;
    bool log_spacing = true;

    // [noise] linear-growth bounds of the noise coefficient
    double lip = 1.0;
    double Lip = 1.0;

    // [fronts]
    double beta = 1.0;
    bool all_exp_moments = false;

    // [upsilon] evaluation points; empty selects the built-in ladder
    std::vector<double> upsilon_betas;

    // [moments] evaluation points
    std::vector<MomentTarget> moment_targets;

    // [simulate] scheme parameters; kernel, heat parameters and the initial
    // measure are copied in from the sections above
    SimConfig sim;
    double sim_lam = 1.0; // noise coefficient rho(u) = lam u

    std::uint64_t seed = 1;
};

/// Builds a RunConfig from parsed INI text with a parse-validate-reject
/// cycle: unknown sections, unknown keys, keys that do not apply to the
/// selected kernel variant or measure kind, and malformed values are all
/// ConfigErrors naming the offender. Missing optional entries fall back to
/// the defaults above; nothing is silently ignored.
RunConfig build_run_config(const ParsedConfig& ini);

/// parse_ini_file followed by build_run_config.
RunConfig load_run_config(const std::string& path);

} // namespace she
