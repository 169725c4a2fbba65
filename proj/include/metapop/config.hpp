#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "metapop/montecarlo.hpp"

namespace metapop {

// Flat, line-oriented `key = value` configuration with dotted sections and
// `#` comments. Unknown keys are rejected against the schema; every getter
// records the key as consumed so the manifest can echo the full resolved
// configuration.
class Config {
  public:
    static Config from_file(const std::string& path);
    static Config from_string(const std::string& text);

    void apply_override(const std::string& key_equals_value);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long get_long(const std::string& key) const;
    long get_long(const std::string& key, long fallback) const;
    std::vector<double> get_doubles(const std::string& key) const;
    std::vector<long> get_longs(const std::string& key) const;

    // Throws listing unknown keys and the valid vocabulary.
    void check_keys() const;

    const std::map<std::string, std::string>& entries() const { return entries_; }
    void write_manifest(const std::string& path, std::uint64_t seed) const;

  private:
    std::map<std::string, std::string> entries_;
};

// Builders from a validated config. Seed/threads/out may be overridden by
// CLI flags before building the setup.
std::shared_ptr<const Landscape> build_landscape(const Config& cfg);
ColonizationFunction build_colonization(const Config& cfg);
BoundSpec build_bound_spec(const Config& cfg);
ExperimentSetup build_experiment_setup(const Config& cfg);

inline const char* version_string() { return "metapop 0.1.0"; }

}  // namespace metapop
