#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "config.hpp"
#include "stages.hpp"

namespace {

std::filesystem::path output_root() {
  const char* env = std::getenv("WAVELAB_OUTPUT");
  return env && *env ? std::filesystem::path(env) : std::filesystem::path("wavelab-out");
}

int report_config_error(const wavelab::cli::ConfigError& e) {
  std::cerr << "config validation failed:\n";
  for (const auto& i : e.issues()) std::cerr << "  " << i << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace wavelab::cli;
  CLI::App app{"wavelab: steady states, invariant manifolds and exterior energy for radial focusing waves"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::pair<std::string, CLI::App*>> stage_cmds;
  for (const auto& name : stage_names()) {
    auto* sub = app.add_subcommand(name, "run stage '" + name + "' and its dependencies");
    sub->add_option("config", config_path, "experiment config (INI)")->required()->check(CLI::ExistingFile);
    stage_cmds.emplace_back(name, sub);
  }
  auto* run = app.add_subcommand("run", "run the stages listed in [run] stages");
  run->add_option("config", config_path, "experiment config (INI)")->required()->check(CLI::ExistingFile);
  std::string experiment;
  auto* desc = app.add_subcommand("describe", "stage graph, required fields and verified statements");
  desc->add_option("name", experiment, "stage name or 'run'")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (desc->parsed()) {
    try {
      std::cout << describe(experiment);
      return 0;
    } catch (const UnknownExperiment& e) {
      std::cerr << e.what() << "; known experiments:";
      for (const auto& a : e.alternatives()) std::cerr << " " << a;
      std::cerr << "\n";
      return 1;
    }
  }

  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    return report_config_error(e);
  }
  std::vector<std::string> requested = cfg.run.stages;
  for (const auto& [name, sub] : stage_cmds)
    if (sub->parsed()) requested = {name};

  try {
    const auto out = run_pipeline(cfg, requested, output_root(), config_path);
    for (const auto& st : out.manifest["stages"]) {
      std::cout << st["name"].get<std::string>() << ": " << st["status"].get<std::string>();
      if (st.contains("cause")) std::cout << " (" << st["cause"].get<std::string>() << ")";
      std::cout << "\n";
    }
    std::cout << "manifest: " << (out.directory / "manifest.json").string() << "\n";
    return out.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
