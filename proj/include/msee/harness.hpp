#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "msee/config.hpp"

namespace msee {

struct Assertion {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Collects artifacts and checks of one experiment run. Output writing goes
/// through this object only.
class RunContext {
 public:
  RunContext(const ExperimentConfig& cfg, std::filesystem::path dir);

  const ExperimentConfig& config() const { return cfg_; }
  const std::filesystem::path& dir() const { return dir_; }
  std::size_t threads() const;

  /// Writes `name` (relative to the output directory) via `body`.
  void write(const std::string& name, const std::function<void(std::ostream&)>& body);
  /// Polyline plot of (x, y) series; only when output.svg is set.
  void plot(const std::string& name, const std::string& title,
            const std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>>& series);

  void stat(const std::string& key, double value) { stats_[key] = value; }
  void note(const std::string& key, const std::string& value) { notes_[key] = value; }
  bool check(const std::string& name, bool passed, const std::string& detail = {});

  const std::vector<std::string>& files() const { return files_; }
  const std::map<std::string, double>& stats() const { return stats_; }
  const std::map<std::string, std::string>& notes() const { return notes_; }
  const std::vector<Assertion>& assertions() const { return assertions_; }

 private:
  const ExperimentConfig& cfg_;
  std::filesystem::path dir_;
  std::vector<std::string> files_;
  std::map<std::string, double> stats_;
  std::map<std::string, std::string> notes_;
  std::vector<Assertion> assertions_;
};

struct Experiment {
  std::string name;
  std::string description;
  /// Appends field-level problems; must not run anything expensive.
  std::function<void(const ExperimentConfig&, std::vector<std::string>&)> validate;
  std::function<void(RunContext&)> run;
};

const std::vector<Experiment>& experiment_registry();
const Experiment* find_experiment(const std::string& name);

enum class RunStatus { Passed = 0, AssertionFailed = 1, Error = 2 };

struct RunOutcome {
  RunStatus status = RunStatus::Error;
  std::string error;
  std::vector<Assertion> assertions;
  std::vector<std::string> files;
  std::filesystem::path manifest;
};

/// Validates, runs, and writes manifest.json (also on failure).
RunOutcome run_experiment(const ExperimentConfig& cfg);

/// Calls fn(i) for i < count on a worker pool. Each index is processed
/// exactly once; results written per index stay deterministic.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

/// Pairwise (cascade) summation.
double pairwise_sum(const double* data, std::size_t n);
inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

std::string code_version();

}  // namespace msee
