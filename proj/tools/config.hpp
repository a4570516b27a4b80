#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace wavelab::cli {

/// Every offending field, one message each.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

struct ExperimentConfig {
  struct {
    std::string family = "power_law";
    double V0 = 40.0;
    double s = 2.5;
    /// bump and well families only
    double radius = 1.0;
  } potential;

  struct {
    int n = 4096;
    double r_max = 100.0;
    /// Pick r_max from the longest requested run instead (see resolved_r_max).
    bool auto_size = false;
  } grid;

  struct {
    /// ground | excited | zero | an index into the energy-sorted list
    std::string target = "excited";
    int max_nodes = 3;
    double a_max = 5.0;
  } steady;

  struct {
    std::string kind = "nonlinear";
    double cfl = 0.5;
    double t_end = 20.0;
    double amplitude = 0.1;
    int record_every = 40;
  } evolve;

  struct {
    double budget = 0.05;
    double tol = 1e-10;
    double t_cut = 0.0;
    double lambda = 1e-4;
    bool bisection = true;
    double K = 20.0;
    double eps1 = 1e-2;
    double t_run = 70.0;
    std::vector<double> deltas{1e-5, 1e-6, 1e-7};
    std::vector<double> chart_lambdas{-1e-4, 0.0, 1e-4};
    std::vector<double> chart_amplitudes{-1e-4, 0.0, 1e-4};
    double growth_T = 1.2;
    double growth_eps = 1e-5;
  } manifold;

  struct {
    std::vector<double> R{1.0, 2.0, 5.0};
    double mu = 1e-3;
    double t_window = 4.0;
    double nonlinear_size = 1e-4;
    double beta = 1e-2;
  } channel;

  struct {
    int draws = 50;
    double t_end = 10.0;
  } norms;

  struct {
    std::vector<std::string> stages{"all"};
    std::uint64_t seed = 1;
    /// 0 means the number of available cores.
    int workers = 0;
  } run;

  std::string output_dir;
  /// section.key -> value exactly as given in the file
  std::map<std::string, std::string> echo;

  double resolved_r_max() const;
  int resolved_workers() const;
};

ExperimentConfig parse_config(std::istream& in, const std::string& default_output_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace wavelab::cli
