#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace wavelab::cli {

struct ExperimentConfig;

/// Stage names double as subcommand names.
const std::vector<std::string>& stage_names();
bool is_stage(const std::string& name);

/// `requested` plus everything it depends on, in execution order. "all" expands to every stage.
std::vector<std::string> stage_closure(const std::vector<std::string>& requested);

class UnknownExperiment : public std::invalid_argument {
 public:
  UnknownExperiment(const std::string& name, std::vector<std::string> alternatives);
  const std::vector<std::string>& alternatives() const { return alternatives_; }

 private:
  std::vector<std::string> alternatives_;
};

/// Stage graph, required config fields and the statements each stage checks.
std::string describe(const std::string& name);

struct RunOutcome {
  nlohmann::json manifest;
  std::filesystem::path directory;
  /// 0 success, 2 when some stage failed.
  int exit_code = 0;
};

/// Runs the closure of `requested` and writes artifacts plus manifest.json (last, atomically)
/// under root / cfg.output_dir.
RunOutcome run_pipeline(const ExperimentConfig& cfg, const std::vector<std::string>& requested,
                        const std::filesystem::path& root, const std::string& config_path = "");

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace wavelab::cli
