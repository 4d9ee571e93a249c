#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace msee {

/// Sectioned key=value configuration:
///   [experiment] name
///   [problem]    operator and coefficient parameters
///   [numerics]   solver settings
///   [monte_carlo] replicas, seed, threads
///   [output]     dir, svg
/// Keys are addressed as "section.key". Unset keys fall back to the schema
/// default.
class ExperimentConfig {
 public:
  static ExperimentConfig parse_file(const std::filesystem::path& file);
  static ExperimentConfig parse_string(const std::string& text);

  /// Applies "section.key=value". Throws ConfigError on malformed input.
  void set(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string str(const std::string& key) const;
  double num(const std::string& key) const;
  long long integer(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::uint64_t seed() const;

  std::string experiment() const { return str("experiment.name"); }
  /// output.dir, prefixed by $MSEE_OUTPUT_ROOT when relative.
  std::filesystem::path output_dir() const;

  /// Explicitly set values only.
  const std::map<std::string, std::string>& values() const { return values_; }
  /// Every schema key with its effective value.
  std::map<std::string, std::string> effective() const;

 private:
  std::map<std::string, std::string> values_;
};

struct ConfigKey {
  std::string key;
  std::string type;  // "string", "number", "integer", "bool", or "a|b|c" choices
  std::string fallback;  // empty: required
  std::string help;
};

const std::vector<ConfigKey>& config_schema();

/// Field-level problems: unknown keys, missing required fields, bad types,
/// and experiment-specific preconditions. Empty when the config is runnable.
std::vector<std::string> validate_config(const ExperimentConfig& cfg);

}  // namespace msee
