#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oulab/domain.hpp"
#include "oulab/gradient.hpp"
#include "oulab/matrixcalc.hpp"

namespace oulab {

// Flat key-value configuration with dotted sections, e.g.
//   model.d = 2
//   model.A = 0 0 1 0
//   domain.kind = ball
// Precedence when assembling a run: CLI flags > environment (OULAB_<KEY>
// with dots as underscores) > config file > defaults.
class KeyValueConfig {
  public:
    static KeyValueConfig from_file(const std::string& path);
    static KeyValueConfig from_string(const std::string& text);

    bool has(const std::string& key) const;
    std::string get(const std::string& key, const std::string& fallback = "") const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::vector<double> get_doubles(const std::string& key) const;
    void set(const std::string& key, const std::string& value);

    // Canonical "key=value" lines, sorted; basis of the config hash.
    std::string canonical() const;
    const std::map<std::string, std::string>& entries() const { return map_; }

  private:
    std::map<std::string, std::string> map_;
};

struct RunConfig {
    OUModel model;
    ConvexDomain domain;
    double T = 1.0;
    int n = 7;
    std::int64_t m = 100000;
    std::uint64_t seed = 1;
    int threads = 1;
    int quad_level = 0;  // 0 => max(n, 7)
    TestFunction phi;
    GradConfig grad;
    Vec x;
    Vec y;
    std::string out_dir = ".";
    std::string format = "csv";
    bool timing = true;  // wall_ms column; validate turns it off for byte comparisons
    std::uint64_t config_hash = 0;
    std::string canonical_text;

    int effective_quad_level() const { return quad_level > 0 ? quad_level : std::max(n, 7); }
};

// Builds a RunConfig from merged key-values; throws ErrorKind::config with a
// field-level message on malformed input (asymmetric C, bad sizes, ...).
RunConfig build_run_config(const KeyValueConfig& kv);

std::uint64_t config_hash(const KeyValueConfig& kv);

}  // namespace oulab
