#include "msee/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "msee/errors.hpp"
#include "msee/harness.hpp"

namespace msee {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

const ConfigKey* find_key(const std::string& key) {
  for (const auto& k : config_schema())
    if (k.key == key) return &k;
  return nullptr;
}

bool parse_double(const std::string& s, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(s, &pos);
    return pos == s.size() && std::isfinite(out);
  } catch (...) {
    return false;
  }
}

bool parse_ll(const std::string& s, long long& out) {
  try {
    std::size_t pos = 0;
    out = std::stoll(s, &pos);
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

bool parse_bool(const std::string& s, bool& out) {
  std::string l = s;
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
  if (l == "true" || l == "1" || l == "yes" || l == "on") return out = true, true;
  if (l == "false" || l == "0" || l == "no" || l == "off") return out = false, true;
  return false;
}

std::string type_problem(const ConfigKey& k, const std::string& v) {
  double d;
  long long i;
  bool b;
  if (k.type == "string") return {};
  if (k.type == "number") return parse_double(v, d) ? "" : "expected a number";
  if (k.type == "integer") return parse_ll(v, i) ? "" : "expected an integer";
  if (k.type == "bool") return parse_bool(v, b) ? "" : "expected true or false";
  std::stringstream ss(k.type);
  std::string choice;
  while (std::getline(ss, choice, '|'))
    if (choice == v) return {};
  return "expected one of " + k.type;
}

ExperimentConfig from_tree(const boost::property_tree::ptree& tree) {
  ExperimentConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError("key '" + section + "' outside a section");
    for (const auto& [key, value] : body) cfg.set(section + "." + key, trim(value.data()));
  }
  return cfg;
}

}  // namespace

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> schema = {
      {"experiment.name", "string", "", "registry name"},
      {"problem.p", "number", "3", "nonlinearity exponent, p >= 2"},
      {"problem.n_grid", "integer", "32", "interior grid points"},
      {"problem.T", "number", "1", "horizon"},
      {"problem.forcing", "number", "0.5", "amplitude of the additive forcing"},
      {"problem.a", "number", "-1", "scalar drift coefficient"},
      {"problem.b", "number", "0.5", "scalar diffusion coefficient"},
      {"problem.u0", "number", "1", "initial amplitude"},
      {"problem.mu", "number", "1", "delay toy damping"},
      {"problem.kappa", "number", "0.5", "delay / driver coupling"},
      {"problem.sigma", "number", "0.5", "delay toy noise amplitude"},
      {"problem.S", "number", "0.25", "memory horizon"},
      {"problem.kernel", "exp|constant", "exp", "Volterra kernel"},
      {"problem.target", "porous_medium|reaction_diffusion|planted_sine", "porous_medium",
       "hypothesis_report target"},
      {"problem.modulus", "linear|rho_k|power", "linear", "Bihari modulus"},
      {"problem.slope", "number", "1", "linear modulus slope / power coefficient"},
      {"problem.k", "integer", "1", "iterated-log depth"},
      {"problem.eta", "number", "0.3", "rho_k switch point"},
      {"problem.alpha", "number", "0.5", "power modulus exponent"},
      {"problem.g0", "number", "1", "Bihari initial value"},
      {"problem.lambda", "number", "1", "Bihari weight"},
      {"numerics.n_modes", "integer", "8", "Galerkin dimension"},
      {"numerics.dt", "number", "0.001", "time step"},
      {"numerics.scheme", "drift_implicit|semi_implicit", "drift_implicit", "step scheme"},
      {"numerics.initial_guess", "previous|predictor", "previous", "nonlinear solve start"},
      {"numerics.resolvent_tol", "number", "1e-10", "nonlinear solve tolerance"},
      {"numerics.resolvent_max_iter", "integer", "50", "nonlinear solve iterations"},
      {"numerics.rescale_lambda0", "bool", "false", "discount lambda0"},
      {"numerics.levels", "integer", "3", "refinement levels"},
      {"numerics.degree", "integer", "2", "regression degree"},
      {"numerics.picard_tol", "number", "1e-10", "Picard tolerance"},
      {"numerics.picard_max_iter", "integer", "50", "Picard iterations"},
      {"numerics.samples", "integer", "500", "hypothesis samples"},
      {"monte_carlo.replicas", "integer", "16", "replicas / paths"},
      {"monte_carlo.seed", "integer", "1", "base seed"},
      {"monte_carlo.threads", "integer", "0", "worker threads, 0 = hardware"},
      {"output.dir", "string", "", "output directory"},
      {"output.svg", "bool", "false", "also write SVG plots"},
  };
  return schema;
}

ExperimentConfig ExperimentConfig::parse_file(const std::filesystem::path& file) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(file.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("cannot parse config: ") + e.what());
  }
  return from_tree(tree);
}

ExperimentConfig ExperimentConfig::parse_string(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("cannot parse config: ") + e.what());
  }
  return from_tree(tree);
}

void ExperimentConfig::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' lacks '='");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (key.find('.') == std::string::npos)
    throw ConfigError("key '" + key + "' must be written as section.key");
  values_[key] = value;
}

std::string ExperimentConfig::str(const std::string& key) const {
  if (auto it = values_.find(key); it != values_.end()) return it->second;
  const ConfigKey* k = find_key(key);
  if (!k) throw ConfigError("unknown key " + key);
  if (k->fallback.empty()) throw ConfigError(key + ": required field missing");
  return k->fallback;
}

double ExperimentConfig::num(const std::string& key) const {
  double d;
  if (!parse_double(str(key), d)) throw ConfigError(key + ": expected a number");
  return d;
}

long long ExperimentConfig::integer(const std::string& key) const {
  long long i;
  if (!parse_ll(str(key), i)) throw ConfigError(key + ": expected an integer");
  return i;
}

std::size_t ExperimentConfig::count(const std::string& key) const {
  const long long i = integer(key);
  if (i < 0) throw ConfigError(key + ": must be non-negative");
  return static_cast<std::size_t>(i);
}

bool ExperimentConfig::flag(const std::string& key) const {
  bool b;
  if (!parse_bool(str(key), b)) throw ConfigError(key + ": expected true or false");
  return b;
}

std::uint64_t ExperimentConfig::seed() const {
  const long long s = integer("monte_carlo.seed");
  if (s < 0) throw ConfigError("monte_carlo.seed: must be non-negative");
  return static_cast<std::uint64_t>(s);
}

std::filesystem::path ExperimentConfig::output_dir() const {
  std::filesystem::path dir = str("output.dir");
  if (dir.is_relative()) {
    if (const char* root = std::getenv("MSEE_OUTPUT_ROOT"); root && *root)
      dir = std::filesystem::path(root) / dir;
  }
  return dir;
}

std::map<std::string, std::string> ExperimentConfig::effective() const {
  std::map<std::string, std::string> out;
  for (const auto& k : config_schema()) {
    if (auto it = values_.find(k.key); it != values_.end())
      out[k.key] = it->second;
    else if (!k.fallback.empty())
      out[k.key] = k.fallback;
  }
  return out;
}

std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
  std::vector<std::string> problems;
  for (const auto& [key, value] : cfg.values()) {
    const ConfigKey* k = find_key(key);
    if (!k) {
      problems.push_back(key + ": unknown key");
      continue;
    }
    if (auto p = type_problem(*k, value); !p.empty()) problems.push_back(key + ": " + p);
  }
  for (const auto& k : config_schema())
    if (k.fallback.empty() && !cfg.has(k.key)) problems.push_back(k.key + ": required field missing");
  if (!problems.empty()) return problems;

  const Experiment* exp = find_experiment(cfg.experiment());
  if (!exp) {
    problems.push_back("experiment.name: unknown experiment '" + cfg.experiment() + "'");
    return problems;
  }
  try {
    exp->validate(cfg, problems);
  } catch (const Error& e) {
    problems.push_back(e.what());
  }
  return problems;
}

}  // namespace msee
