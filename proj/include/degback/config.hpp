#pragma once

// Run configuration. The file format is one `key = value` per line; `#`
// starts a comment and blank lines are ignored. Keys:
//
//   alpha             degeneracy exponent, 0 <= alpha < 1         (0.5)
//   lambda            target decay rate, >= 0                     (5)
//   n_modes           truncation N, 2..512                        (64)
//   resonance_margin  >= 0; default 1e-6 * lambda
//   t_final           simulation horizon                          (2)
//   dt                output sampling step                        (0.01)
//   tol               integrator local tolerance                  (1e-8)
//   fit_start         decay-fit window start                      (0.5)
//   fit_end           decay-fit window end                        (1.5)
//   out_dir           output directory                            (out)
//   seed              seed for randomized checks                  (20240611)

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "degback/closed_loop_sim.hpp"
#include "degback/errors.hpp"
#include "degback/kernel_builder.hpp"

namespace degback {

inline constexpr int kMaxModes = 512;

struct RunConfig {
    double alpha = 0.5;
    double lambda = 5.0;
    int n_modes = 64;
    std::optional<double> resonance_margin;
    SimConfig sim;
    std::string out_dir = "out";
    std::uint64_t seed = 20240611;

    double margin() const { return resonance_margin.value_or(1e-6 * lambda); }
    DecayConfig decay() const { return {lambda, margin()}; }

    void validate() const {
        if (!std::isfinite(alpha) || alpha < 0.0 || alpha >= 1.0) throw ConfigError("alpha", "must lie in [0, 1)");
        if (!std::isfinite(lambda) || lambda < 0.0) throw ConfigError("lambda", "must be finite and >= 0");
        if (n_modes < 2 || n_modes > kMaxModes) {
            throw ConfigError("n_modes", "must lie in [2, " + std::to_string(kMaxModes) + "]");
        }
        if (!std::isfinite(margin()) || margin() < 0.0) throw ConfigError("resonance_margin", "must be finite and >= 0");
        if (out_dir.empty()) throw ConfigError("out_dir", "must not be empty");
        sim.validate();
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& text) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) throw ConfigError(key, "not a number: '" + text + "'");
    return v;
}

inline long long parse_integer(const std::string& key, const std::string& text) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) throw ConfigError(key, "not an integer: '" + text + "'");
    return v;
}

}  // namespace detail

/// Applies one key/value pair; unknown keys are rejected.
inline void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "alpha") {
        cfg.alpha = detail::parse_double(key, value);
    } else if (key == "lambda") {
        cfg.lambda = detail::parse_double(key, value);
    } else if (key == "n_modes") {
        const long long n = detail::parse_integer(key, value);
        if (n < 2 || n > kMaxModes) throw ConfigError(key, "must lie in [2, " + std::to_string(kMaxModes) + "]");
        cfg.n_modes = static_cast<int>(n);
    } else if (key == "resonance_margin") {
        cfg.resonance_margin = detail::parse_double(key, value);
    } else if (key == "t_final") {
        cfg.sim.t_final = detail::parse_double(key, value);
    } else if (key == "dt") {
        cfg.sim.dt = detail::parse_double(key, value);
    } else if (key == "tol") {
        cfg.sim.integrator_tol = detail::parse_double(key, value);
    } else if (key == "fit_start") {
        cfg.sim.fit_start = detail::parse_double(key, value);
    } else if (key == "fit_end") {
        cfg.sim.fit_end = detail::parse_double(key, value);
    } else if (key == "out_dir") {
        cfg.out_dir = value;
    } else if (key == "seed") {
        const long long s = detail::parse_integer(key, value);
        if (s < 0) throw ConfigError(key, "must be non-negative");
        cfg.seed = static_cast<std::uint64_t>(s);
    } else {
        throw ConfigError(key, "unknown configuration key");
    }
}

inline void parse_config_text(RunConfig& cfg, const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno), "expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno), "missing key");
        apply_config_value(cfg, key, value);
    }
}

inline void load_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    parse_config_text(cfg, buf.str());
}

}  // namespace degback
