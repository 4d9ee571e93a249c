#include <CLI11.hpp>

#include <iostream>

#include "msee/config.hpp"
#include "msee/errors.hpp"
#include "msee/harness.hpp"

namespace {

msee::ExperimentConfig load(const std::string& file, const std::vector<std::string>& sets) {
  auto cfg = msee::ExperimentConfig::parse_file(file);
  for (const auto& s : sets) cfg.set(s);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monotone SEE experiments"};
  app.require_subcommand(1);

  std::string file;
  std::vector<std::string> sets;

  auto* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("config", file, "config file")->required()->check(CLI::ExistingFile);
  run->add_option("--set", sets, "override, section.key=value");

  auto* list = app.add_subcommand("list", "list registered experiments");

  auto* validate = app.add_subcommand("validate", "check a config without running it");
  validate->add_option("config", file, "config file")->required()->check(CLI::ExistingFile);
  validate->add_option("--set", sets, "override, section.key=value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*list) {
    for (const auto& e : msee::experiment_registry())
      std::cout << e.name << "\t" << e.description << "\n";
    return 0;
  }

  try {
    const auto cfg = load(file, sets);
    if (*validate) {
      const auto problems = msee::validate_config(cfg);
      for (const auto& p : problems) std::cout << p << "\n";
      if (problems.empty()) std::cout << "ok\n";
      return problems.empty() ? 0 : 2;
    }
    const auto out = msee::run_experiment(cfg);
    for (const auto& a : out.assertions)
      std::cout << (a.passed ? "PASS " : "FAIL ") << a.name
                << (a.detail.empty() ? "" : "  (" + a.detail + ")") << "\n";
    if (!out.error.empty()) std::cerr << "error: " << out.error << "\n";
    if (!out.manifest.empty()) std::cout << "manifest: " << out.manifest.string() << "\n";
    return static_cast<int>(out.status);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
