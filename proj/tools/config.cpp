#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <thread>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "stages.hpp"

namespace wavelab::cli {

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : "; ") + x;
  return s;
}

bool parse_number(const std::string& text, double& out) {
  const auto t = boost::trim_copy(text);
  const auto* end = t.data() + t.size();
  auto [p, ec] = std::from_chars(t.data(), end, out);
  return ec == std::errc() && p == end && std::isfinite(out);
}

bool parse_int(const std::string& text, long long& out) {
  const auto t = boost::trim_copy(text);
  const auto* end = t.data() + t.size();
  auto [p, ec] = std::from_chars(t.data(), end, out);
  return ec == std::errc() && p == end;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of(","));
  for (auto& p : parts) boost::trim(p);
  parts.erase(std::remove(parts.begin(), parts.end(), std::string()), parts.end());
  return parts;
}

using Setter = std::function<bool(const std::string&)>;

Setter real(double& dst) {
  return [&dst](const std::string& v) { return parse_number(v, dst); };
}

Setter integer(int& dst) {
  return [&dst](const std::string& v) {
    long long x;
    if (!parse_int(v, x) || x < INT32_MIN || x > INT32_MAX) return false;
    dst = static_cast<int>(x);
    return true;
  };
}

Setter flag(bool& dst) {
  return [&dst](const std::string& v) {
    const auto t = boost::to_lower_copy(boost::trim_copy(v));
    if (t == "true" || t == "yes" || t == "1") dst = true;
    else if (t == "false" || t == "no" || t == "0") dst = false;
    else return false;
    return true;
  };
}

Setter text(std::string& dst) {
  return [&dst](const std::string& v) {
    dst = boost::trim_copy(v);
    return !dst.empty();
  };
}

Setter reals(std::vector<double>& dst) {
  return [&dst](const std::string& v) {
    std::vector<double> out;
    for (const auto& p : split_list(v)) {
      double x;
      if (!parse_number(p, x)) return false;
      out.push_back(x);
    }
    dst = std::move(out);
    return !dst.empty();
  };
}

Setter words(std::vector<std::string>& dst) {
  return [&dst](const std::string& v) {
    dst = split_list(v);
    return !dst.empty();
  };
}

Setter seed(std::uint64_t& dst) {
  return [&dst](const std::string& v) {
    const auto t = boost::trim_copy(v);
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), dst);
    return ec == std::errc() && p == t.data() + t.size();
  };
}

void validate(const ExperimentConfig& c, std::vector<std::string>& issues) {
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) issues.push_back(msg);
  };
  const auto& fam = c.potential.family;
  need(fam == "power_law" || fam == "bump" || fam == "well" || fam == "zero",
       "potential.family: expected power_law, bump, well or zero");
  need(c.potential.V0 >= 0.0, "potential.V0: must be >= 0");
  need(c.potential.s > 1.0, "potential.s: must exceed 1 (decay faster than r^-2)");
  need(c.potential.radius > 0.0, "potential.radius: must be positive");
  need(c.grid.n >= 64, "grid.n: need at least 64 cells");
  need(c.grid.r_max > 0.0, "grid.r_max: must be positive");
  const auto& t = c.steady.target;
  long long idx;
  need(t == "ground" || t == "excited" || t == "zero" || (parse_int(t, idx) && idx >= 0),
       "steady.target: expected ground, excited, zero or a non-negative index");
  need(c.steady.max_nodes >= 0, "steady.max_nodes: must be >= 0");
  need(c.steady.a_max > 0.0, "steady.a_max: must be positive");
  const auto& k = c.evolve.kind;
  need(k == "nonlinear" || k == "linearized" || k == "free", "evolve.kind: expected nonlinear, linearized or free");
  need(c.evolve.cfl > 0.0 && c.evolve.cfl <= 0.9, "evolve.cfl: must lie in (0, 0.9]");
  need(c.evolve.t_end > 0.0, "evolve.t_end: must be positive");
  need(c.evolve.record_every >= 0, "evolve.record_every: must be >= 0");
  const auto& m = c.manifold;
  need(m.budget > 0.0, "manifold.budget: must be positive");
  need(m.tol > 0.0, "manifold.tol: must be positive");
  need(m.t_cut >= 0.0, "manifold.t_cut: must be >= 0 (0 picks the default)");
  need(std::abs(m.lambda) <= m.budget, "manifold.lambda: must not exceed manifold.budget");
  need(m.K > 0.0, "manifold.K: must be positive");
  need(m.eps1 > 0.0, "manifold.eps1: must be positive");
  need(m.t_run > 0.0, "manifold.t_run: must be positive");
  need(std::none_of(m.deltas.begin(), m.deltas.end(), [](double d) { return d == 0.0; }),
       "manifold.deltas: offsets must be nonzero");
  need(m.growth_T > 0.0, "manifold.growth_T: must be positive");
  need(m.growth_eps > 0.0, "manifold.growth_eps: must be positive");
  need(std::all_of(c.channel.R.begin(), c.channel.R.end(), [](double r) { return r >= 0.0; }),
       "channel.R: radii must be >= 0");
  need(c.channel.mu > 0.0, "channel.mu: must be positive");
  need(c.channel.t_window > 0.0, "channel.t_window: must be positive");
  need(c.channel.nonlinear_size > 0.0, "channel.nonlinear_size: must be positive");
  need(c.channel.beta > 0.0, "channel.beta: must be positive");
  need(c.norms.draws > 0, "norms.draws: must be positive");
  need(c.norms.t_end > 0.0, "norms.t_end: must be positive");
  need(c.run.workers >= 0, "run.workers: must be >= 0");
  for (const auto& s : c.run.stages)
    need(s == "all" || is_stage(s), "run.stages: unknown stage '" + s + "'");
  need(!c.output_dir.empty() && c.output_dir.find("..") == std::string::npos,
       "output.dir: must be a non-empty path without '..'");
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> issues)
    : std::runtime_error("invalid config: " + join(issues)), issues_(std::move(issues)) {}

double ExperimentConfig::resolved_r_max() const {
  // data live within ~10 of the origin and mode tails need another ~20 to drop below round-off
  const double longest = std::max({evolve.t_end, manifold.t_run, 2.0 * channel.t_window, norms.t_end});
  return 30.0 + longest;
}

int ExperimentConfig::resolved_workers() const {
  if (run.workers > 0) return run.workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

ExperimentConfig parse_config(std::istream& in, const std::string& default_output_dir) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError({std::string("syntax: ") + e.message() + " (line " + std::to_string(e.line()) + ")"});
  }

  ExperimentConfig c;
  c.output_dir = default_output_dir;
  const std::map<std::string, Setter> fields = {
      {"potential.family", text(c.potential.family)},
      {"potential.V0", real(c.potential.V0)},
      {"potential.s", real(c.potential.s)},
      {"potential.radius", real(c.potential.radius)},
      {"grid.n", integer(c.grid.n)},
      {"grid.r_max", real(c.grid.r_max)},
      {"grid.auto_size", flag(c.grid.auto_size)},
      {"steady.target", text(c.steady.target)},
      {"steady.max_nodes", integer(c.steady.max_nodes)},
      {"steady.a_max", real(c.steady.a_max)},
      {"evolve.kind", text(c.evolve.kind)},
      {"evolve.cfl", real(c.evolve.cfl)},
      {"evolve.t_end", real(c.evolve.t_end)},
      {"evolve.amplitude", real(c.evolve.amplitude)},
      {"evolve.record_every", integer(c.evolve.record_every)},
      {"manifold.budget", real(c.manifold.budget)},
      {"manifold.tol", real(c.manifold.tol)},
      {"manifold.t_cut", real(c.manifold.t_cut)},
      {"manifold.lambda", real(c.manifold.lambda)},
      {"manifold.bisection", flag(c.manifold.bisection)},
      {"manifold.K", real(c.manifold.K)},
      {"manifold.eps1", real(c.manifold.eps1)},
      {"manifold.t_run", real(c.manifold.t_run)},
      {"manifold.deltas", reals(c.manifold.deltas)},
      {"manifold.chart_lambdas", reals(c.manifold.chart_lambdas)},
      {"manifold.chart_amplitudes", reals(c.manifold.chart_amplitudes)},
      {"manifold.growth_T", real(c.manifold.growth_T)},
      {"manifold.growth_eps", real(c.manifold.growth_eps)},
      {"channel.R", reals(c.channel.R)},
      {"channel.mu", real(c.channel.mu)},
      {"channel.t_window", real(c.channel.t_window)},
      {"channel.nonlinear_size", real(c.channel.nonlinear_size)},
      {"channel.beta", real(c.channel.beta)},
      {"norms.draws", integer(c.norms.draws)},
      {"norms.t_end", real(c.norms.t_end)},
      {"run.stages", words(c.run.stages)},
      {"run.seed", seed(c.run.seed)},
      {"run.workers", integer(c.run.workers)},
      {"output.dir", text(c.output_dir)},
  };

  std::vector<std::string> issues;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      issues.push_back(section + ": key outside any section");
      continue;
    }
    for (const auto& [key, node] : body) {
      const std::string name = section + "." + key;
      const auto value = node.get_value<std::string>();
      const auto it = fields.find(name);
      if (it == fields.end()) {
        issues.push_back(name + ": unknown field");
        continue;
      }
      c.echo[name] = value;
      if (!it->second(value)) issues.push_back(name + ": cannot parse '" + value + "'");
    }
  }
  validate(c, issues);
  if (!issues.empty()) throw ConfigError(std::move(issues));
  if (c.grid.auto_size) c.grid.r_max = c.resolved_r_max();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"config: cannot open " + path.string()});
  return parse_config(in, path.stem().string());
}

}  // namespace wavelab::cli
