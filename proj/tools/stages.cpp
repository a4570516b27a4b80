#include "stages.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>

#include <fmt/format.h>

#include "config.hpp"
#include "wavelab/channel.hpp"
#include "wavelab/errors.hpp"
#include "wavelab/evolution.hpp"
#include "wavelab/io.hpp"
#include "wavelab/manifold.hpp"
#include "wavelab/norms.hpp"
#include "wavelab/spectral.hpp"
#include "wavelab/steady_states.hpp"

namespace wavelab::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct StageInfo {
  std::string name;
  std::vector<std::string> deps;
  std::vector<std::string> fields;
  std::string anchors;
  std::string summary;
};

const std::vector<StageInfo>& table() {
  static const std::vector<StageInfo> t = {
      {"steady-find",
       {},
       {"potential.family", "potential.V0", "potential.s", "potential.radius", "grid.n", "grid.r_max",
        "steady.max_nodes", "steady.a_max", "steady.target"},
       "Theorem 1.1 setting (finitely many steady states; ground state Q and sign-changing excited states)",
       "scan phi(0), bisect changes of end behavior, polish by Newton; profiles and energies"},
      {"spectrum",
       {"steady-find"},
       {"steady.target"},
       "Theorem 1.1 (negative eigenvalues of the linearized operator, hyperbolicity); Lemma 3.2 (e^{-kr}/r tails)",
       "negative spectrum of -Lap - V + 5 phi^4 for every state, Meshkov tail fits, hyperbolicity check on the "
       "target (a failure stops everything downstream)"},
      {"evolve",
       {"spectrum"},
       {"evolve.kind", "evolve.cfl", "evolve.t_end", "evolve.amplitude", "evolve.record_every"},
       "energy conservation of the main equation; scattering to (phi, 0) (Theorem 1.1 definitions)",
       "leapfrog run from (phi, 0) plus a bump; snapshots, energy, mode coordinates, exterior energies, "
       "scatter verdict"},
      {"manifold-shoot",
       {"spectrum"},
       {"manifold.lambda", "manifold.budget", "manifold.tol", "manifold.t_cut", "manifold.bisection"},
       "Theorem 2.2 (center-stable manifold as a graph); the stability condition of Section 2 and its "
       "contraction argument",
       "fixed-point iteration of the stability condition for lambda_dot(T); bisection oracle for one mode"},
      {"chart",
       {"spectrum"},
       {"manifold.chart_lambdas", "manifold.chart_amplitudes", "manifold.budget", "manifold.tol", "run.workers"},
       "Theorem 2.2 (smooth map Psi); Theorem 1.1 (C^1 manifold)",
       "lambda_dot(T) over a (lambda, remainder amplitude) table; gradient at 0 against -k"},
      {"growth",
       {"spectrum"},
       {"manifold.growth_T", "manifold.growth_eps", "manifold.K"},
       "Lemma 3.7 (exponential growth forward or backward) and Remark 3.8 (dominant mode)",
       "mu+ / mu- coordinates along a nonlinear run; fitted rates, dominance time, remainder bound"},
      {"channel-scan",
       {"spectrum"},
       {"channel.R", "channel.mu", "channel.t_window", "channel.nonlinear_size", "manifold.K", "manifold.budget"},
       "Lemma 3.3 (linear channel of energy), Lemma 3.4 and Corollary 3.5 (dominant mode), Lemma 3.6 "
       "(nonlinear stability of the channel)",
       "dt-only exterior energy outside r = t + R for growing-mode data; closed-form tail, dominance, "
       "nonlinear comparison"},
      {"expansion-check",
       {"spectrum"},
       {"channel.beta"},
       "Lemma 4.1 (expansion of the energy around a steady state)",
       "cubic remainder of the energy expansion and the -2 k^2 mu+ mu- cross term"},
      {"onepass",
       {"manifold-shoot"},
       {"manifold.deltas", "manifold.eps1", "manifold.t_run", "manifold.lambda"},
       "Theorem 4.2 (one-pass: solutions leaving the manifold emit extra exterior energy and do not scatter "
       "back to phi)",
       "off-manifold velocities, exit times, exterior-energy surplus after the apex, scatter verdicts"},
      {"norms",
       {"spectrum"},
       {"norms.draws", "norms.t_end", "run.seed", "run.workers"},
       "Lemma 2.1 (reversed Strichartz estimate); Lorentz space definitions of Section 2",
       "Lorentz norms against closed forms under refinement, L^{p,p} = L^p, reversed-Strichartz ensemble"},
  };
  return t;
}

const StageInfo& info(const std::string& name) {
  for (const auto& s : table())
    if (s.name == name) return s;
  throw UnknownExperiment(name, stage_names());
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

/// Thrown by a stage that has nothing to do.
struct Skip {
  std::string reason;
};

double bump(double x) { return std::abs(x) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - x * x)) : 0.0; }

std::string tag(double x) { return fmt::format("{:g}", x); }

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

class Context {
 public:
  Context(const ExperimentConfig& c, fs::path d) : cfg(c), dir(std::move(d)) {}

  const ExperimentConfig& cfg;
  fs::path dir;
  std::set<std::string> artifacts;
  json verdicts = json::object();

  std::optional<RadialGrid> grid;
  std::optional<Potential> V;
  std::vector<SteadyState> states;
  std::optional<std::size_t> target;
  std::vector<Spectrum> spectra;
  std::optional<CsData> cs;
  std::optional<ShootResult> shoot;

  void write(const std::string& name, const json& j) {
    write_atomic(dir / name, j.dump(2) + "\n");
    artifacts.insert(name);
  }
  void write(const std::string& name, const Table& t) {
    write_csv(dir / name, t);
    artifacts.insert(name);
  }
  void write(const std::string& name, const Field& f) {
    write_csv(dir / name, f);
    artifacts.insert(name);
  }

  const SteadyState& phi() const { return states.at(*target); }
  const Spectrum& spectrum() const { return spectra.at(*target); }

  void require_unstable() const {
    bool any = false;
    for (const auto& s : spectra) any = any || s.size() > 0;
    if (!any) throw Skip{"no unstable states"};
    if (!target) throw Skip{"target steady state '" + cfg.steady.target + "' not found"};
    if (spectrum().size() == 0) throw Skip{"target steady state has no unstable modes"};
  }

  ShootConfig shoot_config() const {
    ShootConfig sc;
    sc.tol = cfg.manifold.tol;
    sc.t_cut = cfg.manifold.t_cut;
    sc.budget = cfg.manifold.budget;
    return sc;
  }

  State remainder_shape() const {
    const auto& g = *grid;
    auto s = project(spectrum(), State(Field::from_function(g, [](double r) { return bump((r - 3.0) / 2.0); }),
                                       Field(g)))
                 .remainder;
    const double n = energy_norm(s);
    return (1.0 / n) * s;
  }
};

Potential make_potential(const ExperimentConfig& c, const RadialGrid& g) {
  const auto& p = c.potential;
  if (p.family == "power_law") return Potential::power_law(g, p.V0, p.s);
  if (p.family == "bump") return Potential::bump(g, p.V0, p.radius);
  if (p.family == "well") return Potential::spherical_well(g, p.V0, p.radius);
  return Potential::zero(g);
}

std::vector<SteadyState> steady_states_for(const ExperimentConfig& c, const Potential& V) {
  SteadyOptions opt;
  opt.a_hi = c.steady.a_max;
  opt.max_nodes = c.steady.max_nodes;
  return find_steady_states(V, opt);
}

std::optional<std::size_t> select_target(const std::string& t, const std::vector<SteadyState>& states) {
  if (t == "ground" || t == "excited") {
    const int nodes = t == "ground" ? 0 : 1;
    for (std::size_t i = 0; i < states.size(); ++i)
      if (states[i].nodes == nodes && states[i].a > 0.0) return i;
    return std::nullopt;
  }
  if (t == "zero") {
    for (std::size_t i = 0; i < states.size(); ++i)
      if (states[i].a == 0.0) return i;
    return std::nullopt;
  }
  const auto idx = static_cast<std::size_t>(std::stoull(t));
  return idx < states.size() ? std::optional(idx) : std::nullopt;
}

std::size_t zero_index(const std::vector<SteadyState>& states) {
  for (std::size_t i = 0; i < states.size(); ++i)
    if (states[i].a == 0.0) return i;
  throw NumericalError("steady-state list lacks phi = 0");
}

void stage_steady(Context& ctx) {
  ctx.grid = RadialGrid(ctx.cfg.grid.r_max, ctx.cfg.grid.n);
  ctx.V = make_potential(ctx.cfg, *ctx.grid);
  ctx.states = steady_states_for(ctx.cfg, *ctx.V);
  ctx.target = select_target(ctx.cfg.steady.target, ctx.states);

  json list = json::array();
  for (std::size_t i = 0; i < ctx.states.size(); ++i) {
    const auto& s = ctx.states[i];
    const std::string file = fmt::format("steady_{}.csv", i);
    ctx.write(file, s.profile);
    list.push_back({{"index", i},
                    {"a", s.a},
                    {"nodes", s.nodes},
                    {"energy", s.energy},
                    {"tail_coeff", s.tail_coeff},
                    {"residual", s.residual},
                    {"converged", s.converged},
                    {"profile", file}});
  }
  json out = {{"states", list}, {"target", ctx.target ? json(*ctx.target) : json(nullptr)}};
  ctx.write("steady_states.json", out);
  ctx.verdicts["steady-find"] = {{"count", ctx.states.size()},
                                 {"target", ctx.target ? json(*ctx.target) : json(nullptr)}};
}

void stage_spectrum(Context& ctx) {
  json states = json::array();
  ctx.spectra.clear();
  for (std::size_t i = 0; i < ctx.states.size(); ++i) {
    ctx.spectra.push_back(negative_spectrum(linearize(*ctx.V, ctx.states[i])));
    const auto& sp = ctx.spectra.back();
    states.push_back({{"index", i}, {"eigenvalues", sp.eigenvalues}, {"k", sp.k}, {"near_zero", sp.near_zero}});
  }
  json out = {{"states", states}};
  json summary = {{"unstable_counts", json::array()}};
  for (const auto& sp : ctx.spectra) summary["unstable_counts"].push_back(sp.size());

  std::string failure;
  if (ctx.target) {
    const auto op = linearize(*ctx.V, ctx.phi());
    const auto& sp = ctx.spectrum();
    const auto h = hyperbolicity_check(op, sp);
    json modes = json::array();
    for (std::size_t i = 0; i < sp.size(); ++i) {
      const std::string file = fmt::format("mode_{}.csv", i);
      ctx.write(file, sp.modes[i]);
      json m = {{"k", sp.k[i]}, {"eigenvalue", sp.eigenvalues[i]}, {"profile", file},
                {"eigen_residual", eigen_residual(op, sp, i)}};
      try {
        const auto fit = meshkov_fit(sp, i);
        m["fit_rate"] = fit.k_hat;
        m["fit_rate_error"] = fit.rate_error;
        m["fit_c"] = fit.c_hat;
      } catch (const FitError& e) {
        m["fit_error"] = e.what();
      }
      modes.push_back(m);
    }
    out["target"] = {{"index", *ctx.target},
                     {"modes", modes},
                     {"hyperbolicity",
                      {{"pass", h.pass},
                       {"gap_ok", h.gap_ok},
                       {"gap_margin", finite_or_null(h.gap_margin)},
                       {"no_resonance", h.no_resonance},
                       {"resonance_margin", h.resonance_margin},
                       {"stable_under_resize", h.stable_under_resize},
                       {"resize_change", h.resize_change},
                       {"note", h.note}}}};
    summary["target_unstable"] = sp.size();
    summary["hyperbolic"] = h.pass;
    if (!h.pass) failure = "hyperbolicity check failed for the target state: " + h.note;
  }
  bool any = false;
  for (const auto& sp : ctx.spectra) any = any || sp.size() > 0;
  if (!any) summary["note"] = "no unstable states";
  ctx.write("spectrum.json", out);
  ctx.verdicts["spectrum"] = summary;
  if (!failure.empty()) throw NumericalError(failure);
}

void stage_evolve(Context& ctx) {
  const auto& c = ctx.cfg.evolve;
  const auto& g = *ctx.grid;
  const FlowKind kind = parse_flow_kind(c.kind);
  const bool free = kind == FlowKind::free;
  const SteadyState& base = ctx.target ? ctx.phi() : ctx.states.at(zero_index(ctx.states));
  const Spectrum* sp = ctx.target && !free ? &ctx.spectrum() : nullptr;

  const Field bumpf = Field::from_function(g, [](double r) { return bump((r - 3.0) / 2.0); });
  const Field u0 = free ? c.amplitude * bumpf : base.profile + c.amplitude * bumpf;
  EvolveConfig ec;
  ec.kind = kind;
  ec.cfl = c.cfl;
  ec.t_end = c.t_end;
  ec.record_every = c.record_every;
  ec.probes = {ExteriorProbe{0.0, 0.0, false}, ExteriorProbe{0.0, 0.0, true}};
  const auto tr = evolve(State(u0, Field(g)), *ctx.V, free ? nullptr : &base, sp, ec);

  write_snapshots(ctx.dir / "evolve_snapshots.bin", tr.u, tr.dt);
  ctx.artifacts.insert("evolve_snapshots.bin");
  Table t;
  t.add("t", tr.times);
  t.add("energy", tr.energy);
  t.add("shadow_energy", tr.shadow_energy);
  t.add("h_norm", tr.h_norm);
  for (std::size_t i = 0; i < tr.lambda.size(); ++i) {
    t.add(fmt::format("lambda_{}", i), tr.lambda[i]);
    t.add(fmt::format("lambda_dot_{}", i), tr.lambda_dot[i]);
  }
  t.add("exterior_dt", tr.exterior[0]);
  t.add("exterior_full", tr.exterior[1]);
  ctx.write("evolve_series.csv", t);

  auto drift = [](const std::vector<double>& e) {
    double d = 0.0;
    for (double x : e) d = std::max(d, std::abs(x - e.front()));
    return e.empty() ? 0.0 : d / std::max(std::abs(e.front()), 1e-300);
  };
  json out = {{"status", to_string(tr.status)},
              {"dt", tr.dt},
              {"steps", std::lround(std::abs(c.t_end) / tr.dt)},
              {"energy_drift", drift(tr.energy)},
              {"shadow_energy_drift", drift(tr.shadow_energy)},
              {"base_index", free ? json(nullptr) : json(&base - ctx.states.data())}};
  if (kind == FlowKind::nonlinear) out["scatter"] = to_string(scatter_diagnose(tr, ctx.states));
  ctx.write("evolve.json", out);
  ctx.verdicts["evolve"] = {{"status", out["status"]}, {"shadow_energy_drift", out["shadow_energy_drift"]}};
  if (out.contains("scatter")) ctx.verdicts["evolve"]["scatter"] = out["scatter"];
}

void stage_shoot(Context& ctx) {
  ctx.require_unstable();
  const auto& sp = ctx.spectrum();
  std::vector<double> lambdas(sp.size(), 0.0);
  lambdas[0] = ctx.cfg.manifold.lambda;
  ctx.cs = make_cs(sp, lambdas, State::zero(*ctx.grid));
  const auto sc = ctx.shoot_config();
  ctx.shoot = lp_shoot(*ctx.cs, *ctx.V, ctx.phi(), sp, sc);
  const auto& r = *ctx.shoot;

  std::vector<double> linear;
  for (std::size_t i = 0; i < sp.size(); ++i) linear.push_back(-sp.k[i] * lambdas[i]);
  json out = {{"lambdas", lambdas},
              {"lambda_dots", r.lambda_dots},
              {"linear_prediction", linear},
              {"converged", r.converged},
              {"iterations", r.iterations},
              {"residuals", r.residuals},
              {"history", r.history},
              {"x_norm", r.x_norm},
              {"window_end", r.window_end},
              {"t_cut", r.t_cut}};
  json summary = {{"converged", r.converged}, {"lambda_dot", r.lambda_dots}};
  if (ctx.cfg.manifold.bisection && sp.size() == 1) {
    const auto b = bisection_oracle(*ctx.cs, *ctx.V, ctx.phi(), sp, sc);
    out["bisection"] = {{"threshold", b.threshold}, {"lo", b.lo}, {"hi", b.hi}, {"evaluations", b.evaluations},
                        {"difference", std::abs(b.threshold - r.lambda_dots[0])}};
    summary["bisection_difference"] = std::abs(b.threshold - r.lambda_dots[0]);
  }
  ctx.write("manifold_shoot.json", out);
  ctx.verdicts["manifold-shoot"] = summary;
  if (!r.converged) throw NumericalError("fixed-point iteration did not converge");
}

void stage_chart(Context& ctx) {
  ctx.require_unstable();
  const auto& m = ctx.cfg.manifold;
  const auto tab = chart_sample(m.chart_lambdas, m.chart_amplitudes, ctx.remainder_shape(), *ctx.V, ctx.phi(),
                                ctx.spectrum(), ctx.shoot_config(), ctx.cfg.resolved_workers());
  Table t;
  std::vector<double> l, a, v, ok;
  for (std::size_t i = 0; i < tab.lambdas.size(); ++i)
    for (std::size_t j = 0; j < tab.amplitudes.size(); ++j) {
      l.push_back(tab.lambdas[i]);
      a.push_back(tab.amplitudes[j]);
      v.push_back(tab.lambda_dot[i][j]);
      ok.push_back(tab.converged[i][j] ? 1.0 : 0.0);
    }
  t.add("lambda", l);
  t.add("amplitude", a);
  t.add("lambda_dot", v);
  t.add("converged", ok);
  ctx.write("chart.csv", t);
  const double k = ctx.spectrum().k[0];
  json out = {{"gradient_at_zero", finite_or_null(tab.gradient_at_zero)},
              {"minus_k", -k},
              {"gradient_error", finite_or_null(std::abs(tab.gradient_at_zero + k))},
              {"odd_defect", finite_or_null(tab.odd_defect)},
              {"mixed_jump", finite_or_null(tab.mixed_jump)}};
  ctx.write("chart.json", out);
  ctx.verdicts["chart"] = {{"gradient_error", out["gradient_error"]}};
}

void stage_growth(Context& ctx) {
  ctx.require_unstable();
  const auto& sp = ctx.spectrum();
  const auto& m = ctx.cfg.manifold;
  State h0 = State::zero(*ctx.grid);
  for (std::size_t i = 0; i < sp.size(); ++i) h0 += m.growth_eps * State(sp.modes[i], sp.k[i] * sp.modes[i]);
  const auto rep = growth_experiment(h0, *ctx.V, ctx.phi(), sp, m.growth_T, m.K);

  Table t;
  t.add("t", rep.times);
  for (std::size_t i = 0; i < sp.size(); ++i) {
    t.add(fmt::format("mu_plus_{}", i), rep.mu_plus[i]);
    t.add(fmt::format("mu_minus_{}", i), rep.mu_minus[i]);
  }
  t.add("remainder_norm", rep.remainder_norm);
  ctx.write("growth.csv", t);
  std::vector<double> errs;
  for (std::size_t i = 0; i < sp.size(); ++i) errs.push_back(std::abs(rep.fitted_rates[i] - sp.k[i]) / sp.k[i]);
  json out = {{"k", sp.k},
              {"fitted_rates", rep.fitted_rates},
              {"rate_errors", errs},
              {"K", rep.K},
              {"t_dom", rep.t_dom ? json(*rep.t_dom) : json(nullptr)},
              {"dominant_mode", rep.dominant_mode},
              {"remainder_bound_ratio", rep.remainder_bound_ratio}};
  ctx.write("growth.json", out);
  ctx.verdicts["growth"] = {{"rate_errors", errs}, {"remainder_bound_ratio", rep.remainder_bound_ratio}};
}

double t_spread(const ExteriorSeries& s) {
  if (s.values.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(s.values.begin(), s.values.end());
  return *hi > 0.0 ? (*hi - *lo) / *hi : 0.0;
}

void stage_channel(Context& ctx) {
  ctx.require_unstable();
  const auto& sp = ctx.spectrum();
  const auto& c = ctx.cfg.channel;
  const std::size_t n = sp.size();
  ChannelConfig cc;
  cc.t_window = c.t_window;
  std::vector<double> mp(n, 0.0), mm(n, 0.0);
  mp[0] = c.mu;

  json radii = json::array();
  bool pass = true;
  double pure_first = 0.0;
  for (double R : c.R) {
    const auto rep = channel_verify_linear(*ctx.V, ctx.phi(), sp, mp, mm, State::zero(*ctx.grid), R, cc);
    Table t;
    t.add("t", rep.series.times);
    t.add("exterior_dt", rep.series.values);
    ctx.write("channel_R" + tag(R) + ".csv", t);
    const double rel = rep.closed_form > 0.0 ? std::abs(rep.inf - rep.closed_form) / rep.closed_form : NAN;
    radii.push_back({{"R", R},
                     {"inf", rep.inf},
                     {"ratio", rep.ratio},
                     {"ratio_doubled", rep.ratio_doubled},
                     {"t_spread", t_spread(rep.series)},
                     {"tail_mean", rep.tail_mean},
                     {"tail_spread", rep.tail_spread},
                     {"closed_form", rep.closed_form},
                     {"closed_form_error", finite_or_null(rel)},
                     {"pass", rep.pass}});
    pass = pass && rep.pass;
    if (&R == &c.R.front()) pure_first = rep.ratio;
  }

  // everything besides mu+ of mode 0 at exactly 1/K of its size
  const double R0 = c.R.front();
  const double lead = c.mu * energy_norm(State(sp.modes[0], sp.k[0] * sp.modes[0]));
  const double K = ctx.cfg.manifold.K;
  const auto dom = channel_verify_linear(*ctx.V, ctx.phi(), sp, mp, mm, (lead / K) * ctx.remainder_shape(), R0, cc);
  const bool dom_pass = dom.pass && dom.ratio >= 0.5 * pure_first;

  const State h0 = (c.nonlinear_size / energy_norm(State(sp.modes[0], sp.k[0] * sp.modes[0]))) *
                   State(sp.modes[0], sp.k[0] * sp.modes[0]);
  const auto nl = channel_verify_nonlinear(h0, *ctx.V, ctx.phi(), sp, R0, cc, K, ctx.cfg.manifold.budget);
  Table t;
  const std::size_t len = std::min(nl.nonlinear.series.times.size(), nl.linear_series.times.size());
  t.add("t", std::vector<double>(nl.nonlinear.series.times.begin(), nl.nonlinear.series.times.begin() + len));
  t.add("nonlinear", std::vector<double>(nl.nonlinear.series.values.begin(), nl.nonlinear.series.values.begin() + len));
  t.add("linear", std::vector<double>(nl.linear_series.values.begin(), nl.linear_series.values.begin() + len));
  ctx.write("channel_nonlinear.csv", t);

  json out = {{"radii", radii},
              {"dominant", {{"R", R0}, {"ratio", dom.ratio}, {"pure_ratio", pure_first}, {"pass", dom_pass}}},
              {"nonlinear",
               {{"R", R0},
                {"size", c.nonlinear_size},
                {"inf", nl.nonlinear.inf},
                {"required", nl.required},
                {"early_deviation", nl.early_deviation},
                {"pass", nl.nonlinear.pass}}}};
  ctx.write("channel.json", out);
  ctx.verdicts["channel-scan"] = {{"linear_pass", pass}, {"dominant_pass", dom_pass}, {"nonlinear_pass", nl.nonlinear.pass}};
}

void stage_expansion(Context& ctx) {
  ctx.require_unstable();
  const auto& sp = ctx.spectrum();
  const auto& g = *ctx.grid;
  const State lam(Field::from_function(g, [](double r) { return bump((r - 3.0) / 2.0); }), Field(g));
  const auto e = energy_expansion_check(ctx.phi(), *ctx.V, sp, lam, ctx.cfg.channel.beta);
  std::vector<double> half_k2, two_k2, cross_err;
  for (std::size_t i = 0; i < sp.size(); ++i) {
    half_k2.push_back(-0.5 * sp.k[i] * sp.k[i]);
    two_k2.push_back(-2.0 * sp.k[i] * sp.k[i]);
    cross_err.push_back(std::abs(e.cross[i] - two_k2.back()) / std::abs(two_k2.back()));
  }
  bool ratios_ok = true;
  for (double r : e.ratios) ratios_ok = ratios_ok && r >= 6.4 && r <= 9.6;
  const bool cross_ok = std::all_of(cross_err.begin(), cross_err.end(), [](double x) { return x <= 1e-3; });
  json out = {{"betas", e.betas},     {"D", e.D},         {"ratios", e.ratios},
              {"direct", e.direct},   {"quadratic", e.quadratic}, {"minus_half_k2", half_k2},
              {"cross", e.cross},     {"minus_two_k2", two_k2},   {"cross_errors", cross_err},
              {"ratios_in_band", ratios_ok}, {"cross_within_1e-3", cross_ok}};
  ctx.write("expansion.json", out);
  ctx.verdicts["expansion-check"] = {{"ratios_in_band", ratios_ok}, {"cross_within_1e-3", cross_ok}};
}

void stage_onepass(Context& ctx) {
  ctx.require_unstable();
  if (!ctx.shoot || !ctx.cs) throw NumericalError("onepass needs a converged manifold-shoot");
  const auto& m = ctx.cfg.manifold;
  OnePassConfig oc;
  oc.eps1 = m.eps1;
  oc.t_run = m.t_run;
  const auto rep = one_pass_experiment(*ctx.cs, *ctx.shoot, m.deltas, *ctx.V, ctx.phi(), ctx.spectrum(), ctx.states,
                                       ctx.shoot_config(), oc);
  json runs = json::array();
  bool never_back = true, all_positive = true;
  for (std::size_t i = 0; i < rep.runs.size(); ++i) {
    const auto& r = rep.runs[i];
    Table t;
    t.add("t", r.series.times);
    t.add("exterior_surplus", r.series.values);
    const std::string file = fmt::format("onepass_{}.csv", i);
    ctx.write(file, t);
    const bool back = r.scatter.kind == ScatterKind::scatter_to && r.scatter.index == *ctx.target;
    never_back = never_back && !back;
    all_positive = all_positive && r.exited && r.surplus > 0.0;
    runs.push_back({{"delta", r.delta},
                    {"exited", r.exited},
                    {"exit_time", r.exit_time},
                    {"apex", r.apex},
                    {"late_inf", r.late_inf},
                    {"stabilized", r.stabilized},
                    {"surplus", r.surplus},
                    {"scatter", to_string(r.scatter)},
                    {"verdict", r.verdict},
                    {"series", file}});
  }
  json out = {{"base_radiation", rep.base_radiation},
              {"surplus_spread", rep.surplus_spread},
              {"runs", runs},
              {"all_surplus_positive", all_positive},
              {"never_scatters_to_target", never_back}};
  ctx.write("onepass.json", out);
  ctx.verdicts["onepass"] = {{"all_surplus_positive", all_positive},
                             {"surplus_spread", rep.surplus_spread},
                             {"never_scatters_to_target", never_back}};
}

void stage_norms(Context& ctx) {
  const double pi = std::numbers::pi;
  json lorentz = json::array();
  const double ball = 1.5 * std::pow(4.0 * pi / 3.0, 2.0 / 3.0);
  for (int m : {1000, 2000, 4000}) {
    RadialGrid g(4.0, m);
    const auto f = Field::from_function(g, [](double r) { return r < 1.0 - 1e-12 ? 1.0 : 0.0; });
    const double v = lorentz_norm(f, 1.5, 1.0);
    lorentz.push_back({{"case", "unit ball, L^{3/2,1}"}, {"cells", m}, {"value", v}, {"exact", ball},
                       {"rel_error", std::abs(v - ball) / ball}});
  }
  const double weak = std::cbrt(4.0 * pi / 3.0);
  for (int m : {4000, 8000, 16000}) {
    RadialGrid g(8.0, m);
    const auto f = Field::from_function(g, [](double r) { return 1.0 / std::max(r, 1.0); });
    const double v = lorentz_norm(f, 3.0, kInfinity);
    lorentz.push_back({{"case", "1/|x| (cut at 1), L^{3,inf}"}, {"cells", m}, {"value", v}, {"exact", weak},
                       {"rel_error", std::abs(v - weak) / weak}});
  }

  std::mt19937_64 gen(ctx.cfg.run.seed);
  RadialGrid g(10.0, 700);
  Field f(g);
  for (std::size_t j = 0; j < f.size(); ++j) f[j] = 2.0 * static_cast<double>(gen() >> 11) * 0x1p-53 - 1.0;
  json lpp = json::array();
  for (double p : {1.0, 1.5, 2.0, 3.0, 6.0}) {
    const double a = lorentz_norm(f, p, p), b = lp_norm(f, p);
    lpp.push_back({{"p", p}, {"lorentz", a}, {"lp", b}, {"rel_difference", std::abs(a - b) / b}});
  }

  const auto draws = remainder_draws(ctx.cfg.norms.draws, ctx.cfg.run.seed);
  json ensemble = json::array();
  const int n = ctx.cfg.grid.n;
  for (int cells : {n / 4, n / 2, n}) {
    RadialGrid gg(ctx.cfg.grid.r_max, cells);
    const auto V = make_potential(ctx.cfg, gg);
    const auto states = steady_states_for(ctx.cfg, V);
    const auto t = select_target(ctx.cfg.steady.target, states);
    const SteadyState& base = t ? states[*t] : states[zero_index(states)];
    const auto sp = negative_spectrum(linearize(V, base));
    const auto e = reversed_strichartz_ensemble(draws, V, base, sp, ctx.cfg.norms.t_end, ctx.cfg.resolved_workers());
    ensemble.push_back({{"cells", cells}, {"max_ratio", e.max_ratio}, {"mean_ratio", e.mean_ratio}, {"ratios", e.ratios}});
  }
  const double growth = ensemble.back()["max_ratio"].get<double>() / ensemble.front()["max_ratio"].get<double>();
  json out = {{"lorentz", lorentz}, {"lpp_equals_lp", lpp}, {"strichartz_ensemble", ensemble},
              {"refinement_growth", growth}};
  ctx.write("norms.json", out);
  ctx.verdicts["norms"] = {{"refinement_growth", growth},
                           {"finest_max_ratio", ensemble.back()["max_ratio"]}};
}

using StageFn = void (*)(Context&);

StageFn function_for(const std::string& name) {
  static const std::map<std::string, StageFn> m = {
      {"steady-find", stage_steady},  {"spectrum", stage_spectrum},        {"evolve", stage_evolve},
      {"manifold-shoot", stage_shoot}, {"chart", stage_chart},             {"growth", stage_growth},
      {"channel-scan", stage_channel}, {"expansion-check", stage_expansion}, {"onepass", stage_onepass},
      {"norms", stage_norms},
  };
  return m.at(name);
}

}  // namespace

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& s : table()) v.push_back(s.name);
    return v;
  }();
  return names;
}

bool is_stage(const std::string& name) {
  const auto& n = stage_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

std::vector<std::string> stage_closure(const std::vector<std::string>& requested) {
  std::set<std::string> want;
  std::vector<std::string> stack;
  for (const auto& r : requested) {
    if (r == "all") {
      for (const auto& s : stage_names()) stack.push_back(s);
    } else {
      info(r);
      stack.push_back(r);
    }
  }
  while (!stack.empty()) {
    const auto s = stack.back();
    stack.pop_back();
    if (!want.insert(s).second) continue;
    for (const auto& d : info(s).deps) stack.push_back(d);
  }
  // the table is already in dependency order
  std::vector<std::string> out;
  for (const auto& s : stage_names())
    if (want.count(s)) out.push_back(s);
  return out;
}

UnknownExperiment::UnknownExperiment(const std::string& name, std::vector<std::string> alternatives)
    : std::invalid_argument("unknown experiment '" + name + "'"), alternatives_(std::move(alternatives)) {}

std::string describe(const std::string& name) {
  if (name == "run") {
    std::string s = "run: every stage listed in [run] stages (\"all\" for the full pipeline), in dependency order.\n";
    s += "stage graph:\n";
    for (const auto& st : table()) {
      s += "  " + st.name;
      if (!st.deps.empty()) s += " <- " + fmt::format("{}", fmt::join(st.deps, ", "));
      s += "\n";
    }
    s += "required fields: run.stages, run.seed, run.workers, output.dir, plus those of each stage\n";
    return s;
  }
  if (!is_stage(name)) {
    auto alts = stage_names();
    alts.push_back("run");
    std::stable_sort(alts.begin(), alts.end(), [&](const std::string& a, const std::string& b) {
      return edit_distance(name, a) < edit_distance(name, b);
    });
    throw UnknownExperiment(name, alts);
  }
  const auto& st = info(name);
  std::string s = name + ": " + st.summary + "\n";
  const auto chain = stage_closure({name});
  s += "stage graph: " + fmt::format("{}", fmt::join(chain, " -> ")) + "\n";
  s += "required fields:";
  std::vector<std::string> fields;
  for (const auto& c : chain)
    for (const auto& f : info(c).fields)
      if (std::find(fields.begin(), fields.end(), f) == fields.end()) fields.push_back(f);
  for (const auto& f : fields) s += " " + f;
  s += "\nverifies: " + st.anchors + "\n";
  return s;
}

RunOutcome run_pipeline(const ExperimentConfig& cfg, const std::vector<std::string>& requested, const fs::path& root,
                        const std::string& config_path) {
  const auto start = std::chrono::steady_clock::now();
  RunOutcome outcome;
  outcome.directory = root / cfg.output_dir;
  fs::create_directories(outcome.directory);
  // a stale manifest from an earlier run must not outlive a run that dies half way
  fs::remove(outcome.directory / "manifest.json");

  Context ctx(cfg, outcome.directory);
  const auto stages = stage_closure(requested);
  json records = json::array();
  std::set<std::string> failed;
  bool ok = true;
  for (const auto& name : stages) {
    json rec = {{"name", name}};
    std::string blocked;
    for (const auto& d : info(name).deps)
      if (failed.count(d)) blocked = d;
    const auto t0 = std::chrono::steady_clock::now();
    if (!blocked.empty()) {
      rec["status"] = "skipped";
      rec["cause"] = "dependency " + blocked + " did not complete";
      failed.insert(name);
    } else {
      try {
        function_for(name)(ctx);
        rec["status"] = "ok";
      } catch (const Skip& s) {
        rec["status"] = "skipped";
        rec["cause"] = s.reason;
        // later stages see the same reason themselves
      } catch (const std::exception& e) {
        rec["status"] = "failed";
        rec["cause"] = e.what();
        failed.insert(name);
        ok = false;
      }
    }
    rec["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    records.push_back(rec);
  }

  json echo = json::object();
  for (const auto& [k, v] : cfg.echo) echo[k] = v;
  outcome.manifest = {
      {"tool", "wavelab"},
      {"version", kToolVersion},
      {"config_path", config_path},
      {"config", echo},
      {"resolved",
       {{"r_max", cfg.grid.r_max}, {"n", cfg.grid.n}, {"seed", cfg.run.seed}, {"workers", cfg.resolved_workers()}}},
      {"requested", requested},
      {"stages", records},
      {"artifacts", std::vector<std::string>(ctx.artifacts.begin(), ctx.artifacts.end())},
      {"verdicts", ctx.verdicts},
      {"success", ok},
      {"wall_clock_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()},
  };
  write_atomic(outcome.directory / "manifest.json", outcome.manifest.dump(2) + "\n");
  outcome.exit_code = ok ? 0 : 2;
  return outcome;
}

}  // namespace wavelab::cli
