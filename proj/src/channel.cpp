#include "wavelab/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "wavelab/errors.hpp"
#include "wavelab/norms.hpp"

namespace wavelab {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

std::vector<double> centered_derivative(const Field& u) {
  const std::size_t n = u.size();
  const double dr = u.grid().dr();
  std::vector<double> du(n);
  du[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dr);
  du[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * dr);
  for (std::size_t j = 1; j + 1 < n; ++j) du[j] = (u[j + 1] - u[j - 1]) / (2.0 * dr);
  return du;
}

double exterior_of(const Field& u, const Field* ut, double edge, ExteriorKind kind) {
  const auto& g = u.grid();
  std::vector<double> dens(g.size());
  if (kind == ExteriorKind::dt_only) {
    for (std::size_t j = 0; j < dens.size(); ++j) dens[j] = kFourPi * g.r(j) * g.r(j) * (*ut)[j] * (*ut)[j];
  } else {
    const auto du = centered_derivative(u);
    for (std::size_t j = 0; j < dens.size(); ++j) {
      const double v = ut ? (*ut)[j] : 0.0;
      dens[j] = 0.5 * kFourPi * g.r(j) * g.r(j) * (du[j] * du[j] + v * v);
    }
  }
  return shell_integral(dens, g, std::max(edge, 0.0), g.r_max());
}

double mode_norm(const Spectrum& spectrum, std::size_t i) {
  return energy_norm(State(spectrum.modes[i], spectrum.k[i] * spectrum.modes[i]));
}

State mode_data(const Spectrum& spectrum, const std::vector<double>& mu_plus, const std::vector<double>& mu_minus,
                const State& remainder) {
  Field p = remainder.position, v = remainder.velocity;
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    const auto [l, ld] = from_hyperbolic(mu_plus[i], mu_minus[i], spectrum.k[i]);
    p += l * spectrum.modes[i];
    v += ld * spectrum.modes[i];
  }
  return State(std::move(p), std::move(v));
}

double min_over(const ExteriorSeries& s, double t_limit, double* at = nullptr) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < s.times.size(); ++m) {
    if (std::abs(s.times[m]) > t_limit * (1.0 + 1e-12)) continue;
    if (s.values[m] < best) {
      best = s.values[m];
      if (at) *at = s.times[m];
    }
  }
  return best;
}

}  // namespace

ExteriorSeries exterior_energy(const Trajectory& traj, double R, double apex, ExteriorKind kind, bool perturbation) {
  ExteriorSeries out;
  const auto& grid = traj.base.grid();
  for (std::size_t m = 0; m < traj.u.size(); ++m) {
    const double t = traj.u.times[m];
    const double edge = std::abs(t - apex) + R;
    if (edge >= grid.r_max()) {
      out.truncated = true;
      break;
    }
    const Field u = perturbation ? traj.u.frames[m] - traj.base : traj.u.frames[m];
    out.times.push_back(t);
    out.values.push_back(exterior_of(u, &traj.ut.frames[m], edge, kind));
  }
  return out;
}

double static_exterior_energy(const Field& f, double a) { return exterior_of(f, nullptr, a, ExteriorKind::full); }

ChannelReport channel_verify_linear(const Potential& potential, const SteadyState& steady, const Spectrum& spectrum,
                                    const std::vector<double>& mu_plus, const std::vector<double>& mu_minus,
                                    const State& remainder, double R, const ChannelConfig& cfg) {
  const std::size_t n = spectrum.size();
  if (mu_plus.size() != n || mu_minus.size() != n) throw DimensionError("channel_verify_linear: one mu per mode");
  ChannelReport rep;
  rep.R = R;
  rep.mu_plus = mu_plus;
  rep.mu_minus = mu_minus;

  const State h = mode_data(spectrum, mu_plus, mu_minus, remainder);
  EvolveConfig c;
  c.kind = FlowKind::linearized;
  c.cfl = cfg.cfl;
  c.t_end = (cfg.backward ? -2.0 : 2.0) * cfg.t_window;
  c.record_every = cfg.record_every;
  c.track_energy = false;
  // eigenmode data fill the whole box; the frozen outer value keeps them exact there
  c.enforce_causal = false;
  const auto tr = evolve(State(steady.profile + h.position, h.velocity), potential, &steady, nullptr, c);
  rep.series = exterior_energy(tr, R, 0.0, ExteriorKind::dt_only);

  const auto& grow = cfg.backward ? mu_minus : mu_plus;
  const auto& other = cfg.backward ? mu_plus : mu_minus;
  double mass = 0.0;
  for (double m : grow) mass += m * m;
  if (mass == 0.0) {
    for (double m : other) mass += m * m;
    mass += std::pow(energy_norm(remainder), 2);
    rep.note = "no growing component; ratio taken against the total data mass";
  }
  rep.inf = min_over(rep.series, cfg.t_window, &rep.inf_time);
  const double inf2 = min_over(rep.series, 2.0 * cfg.t_window);
  rep.ratio = mass > 0.0 ? rep.inf / mass : 0.0;
  rep.ratio_doubled = mass > 0.0 ? inf2 / mass : 0.0;

  double lo = std::numeric_limits<double>::infinity(), hi = 0.0, sum = 0.0;
  int count = 0;
  for (std::size_t m = 0; m < rep.series.times.size(); ++m) {
    if (std::abs(rep.series.times[m]) + R < cfg.tail_radius) continue;
    lo = std::min(lo, rep.series.values[m]);
    hi = std::max(hi, rep.series.values[m]);
    sum += rep.series.values[m];
    ++count;
  }
  if (count > 0) {
    rep.tail_mean = sum / count;
    rep.tail_spread = rep.tail_mean > 0.0 ? (hi - lo) / rep.tail_mean : 0.0;
  }

  std::size_t i0 = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs(grow[i]) > std::abs(grow[i0])) i0 = i;
  if (n > 0 && grow[i0] != 0.0) {
    const auto fit = meshkov_fit(spectrum, i0);
    const double k = spectrum.k[i0];
    rep.closed_form = 2.0 * std::numbers::pi * k * fit.c_hat * fit.c_hat * grow[i0] * grow[i0] * std::exp(-2.0 * k * R);
  }
  rep.pass = rep.note.empty() && rep.ratio > 0.0 && std::isfinite(rep.ratio) && rep.ratio_doubled >= 0.5 * rep.ratio;
  return rep;
}

NonlinearChannelReport channel_verify_nonlinear(const State& h0, const Potential& potential, const SteadyState& steady,
                                                const Spectrum& spectrum, double R, const ChannelConfig& cfg, double K,
                                                double budget) {
  const std::size_t n = spectrum.size();
  if (n == 0) throw ArgumentError("channel_verify_nonlinear: no unstable modes");
  if (energy_norm(h0) > budget) throw ArgumentError("channel_verify_nonlinear: data exceed the budget");

  const auto coords = project(spectrum, h0);
  std::vector<double> mp(n), mm(n);
  for (std::size_t i = 0; i < n; ++i)
    std::tie(mp[i], mm[i]) = hyperbolic_coords(coords.lambda[i], coords.lambda_dot[i], spectrum.k[i]);
  const auto& grow = cfg.backward ? mm : mp;
  const auto& other = cfg.backward ? mp : mm;

  NonlinearChannelReport rep;
  std::size_t i0 = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs(grow[i]) * mode_norm(spectrum, i) > std::abs(grow[i0]) * mode_norm(spectrum, i0)) i0 = i;
  double rest = energy_norm(coords.remainder);
  for (std::size_t i = 0; i < n; ++i) {
    rest += std::abs(other[i]) * mode_norm(spectrum, i);
    if (i != i0) rest += std::abs(grow[i]) * mode_norm(spectrum, i);
  }
  if (std::abs(grow[i0]) * mode_norm(spectrum, i0) < K * rest)
    throw ArgumentError("channel_verify_nonlinear: dominance condition fails for the configured K");
  rep.dominant_mode = i0;

  const auto lin = channel_verify_linear(potential, steady, spectrum, mp, mm, coords.remainder, R, cfg);
  rep.linear_series = lin.series;
  rep.required = 0.5 * lin.ratio * grow[i0] * grow[i0];

  EvolveConfig c;
  c.kind = FlowKind::nonlinear;
  c.cfl = cfg.cfl;
  c.t_end = (cfg.backward ? -2.0 : 2.0) * cfg.t_window;
  c.record_every = cfg.record_every;
  c.track_energy = false;
  c.enforce_causal = false;
  const auto tr = evolve(State(steady.profile + h0.position, h0.velocity), potential, &steady, nullptr, c);

  auto& nl = rep.nonlinear;
  nl.R = R;
  nl.mu_plus = mp;
  nl.mu_minus = mm;
  nl.series = exterior_energy(tr, R, 0.0, ExteriorKind::dt_only);
  nl.inf = min_over(nl.series, cfg.t_window, &nl.inf_time);
  double mass = 0.0;
  for (double m : grow) mass += m * m;
  nl.ratio = nl.inf / mass;
  nl.ratio_doubled = min_over(nl.series, 2.0 * cfg.t_window) / mass;
  nl.closed_form = lin.closed_form;
  nl.pass = nl.inf >= rep.required && rep.required > 0.0;

  const double t_early = 2.0 / spectrum.k[i0];
  const std::size_t m_max = std::min(nl.series.times.size(), rep.linear_series.times.size());
  for (std::size_t m = 0; m < m_max; ++m) {
    if (std::abs(nl.series.times[m]) > t_early) break;
    const double e = rep.linear_series.values[m];
    if (e > 0.0) rep.early_deviation = std::max(rep.early_deviation, std::abs(nl.series.values[m] - e) / e);
  }
  return rep;
}

ExpansionReport energy_expansion_check(const SteadyState& steady, const Potential& potential, const Spectrum& spectrum,
                                       const State& perturbation, double beta0, double cross_beta) {
  const auto op = linearize(potential, steady);
  const Field& phi = steady.profile;
  const auto& grid = phi.grid();
  const State ground(phi, Field(grid));
  const double E0 = energy(ground, potential);
  const auto w = volume_weights(grid);

  State lam = perturbation;
  double scale = lp_norm(lam.position, 6.0);
  if (scale == 0.0) scale = energy_norm(lam);
  if (scale > 0.0) lam = State((1.0 / scale) * lam.position, (1.0 / scale) * lam.velocity);

  ExpansionReport rep;
  for (double beta : {beta0, 0.5 * beta0, 0.25 * beta0}) {
    const Field p = beta * lam.position;
    const Field q = beta * lam.velocity;
    const double quad = 0.5 * inner(op.apply(p), p) + 0.5 * inner(q, q);
    rep.betas.push_back(beta);
    rep.D.push_back(energy(State(phi + p, q), potential) - E0 - quad);
    double direct = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double f = phi[j], h = p[j];
      const double f2 = f * f, h2 = h * h;
      // C(6,3) f^3 h^3 + C(6,4) f^2 h^4 + C(6,5) f h^5 + h^6, over 6
      direct += w[j] * (20.0 * f2 * f * h2 * h + 15.0 * f2 * h2 * h2 + 6.0 * f * h2 * h2 * h + h2 * h2 * h2) / 6.0;
    }
    rep.direct.push_back(direct);
  }
  for (std::size_t i = 0; i + 1 < rep.D.size(); ++i) rep.ratios.push_back(rep.D[i] / rep.D[i + 1]);

  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    const auto& rho = spectrum.modes[i];
    const double k = spectrum.k[i];
    rep.quadratic.push_back(0.5 * inner(op.apply(rho), rho));
    auto E = [&](double a, double b) {
      const auto [l, ld] = from_hyperbolic(a, b, k);
      return energy(State(phi + l * rho, ld * rho), potential) - E0;
    };
    const double b = cross_beta;
    rep.cross.push_back((E(b, b) + E(-b, -b) - E(b, -b) - E(-b, b)) / (4.0 * b * b));
  }
  return rep;
}

OnePassReport one_pass_experiment(const CsData& cs, const ShootResult& base, const std::vector<double>& deltas,
                                  const Potential& potential, const SteadyState& steady, const Spectrum& spectrum,
                                  const std::vector<SteadyState>& steadies, const ShootConfig& shoot_cfg,
                                  const OnePassConfig& cfg) {
  const double k = spectrum.k.at(0);
  const Field& phi = steady.profile;
  OnePassReport rep;
  const double E_phi = energy(State(phi, Field(phi.grid())), potential);
  rep.base_radiation = energy(cs_state(phi, spectrum, cs, base.lambda_dots), potential) - E_phi;

  for (double delta : deltas) {
    OnePassRun run;
    run.delta = delta;
    auto v = base.lambda_dots;
    v[0] += delta;
    EvolveConfig c;
    c.cfl = shoot_cfg.cfl;
    c.t0 = cs.T;
    c.t_end = cs.T + cfg.t_run;
    c.record_every = cfg.record_every;
    c.track_energy = false;
    const auto tr = evolve(cs_state(phi, spectrum, cs, v), potential, &steady, nullptr, c);

    for (std::size_t m = 1; m < tr.times.size(); ++m) {
      if (tr.h_norm[m] < cfg.eps1) continue;
      const double a = tr.h_norm[m - 1], b = tr.h_norm[m];
      run.exit_time = tr.times[m - 1] + (cfg.eps1 - a) / (b - a) * (tr.times[m] - tr.times[m - 1]);
      run.exited = true;
      break;
    }
    run.scatter = scatter_diagnose(tr, steadies, cfg.scatter);
    if (!run.exited) {
      run.verdict = "NO-EXIT";
      rep.runs.push_back(std::move(run));
      continue;
    }
    // the departure needs about log(1 / eps1) / k more to reach order one
    run.apex = run.exit_time + std::log(1.0 / cfg.eps1) / k;
    const auto full = exterior_energy(tr, 0.0, run.apex, ExteriorKind::full, false);
    for (std::size_t m = 0; m < full.times.size(); ++m) {
      const double t = full.times[m];
      if (t < run.apex) continue;
      run.series.times.push_back(t);
      run.series.values.push_back(full.values[m] - static_exterior_energy(phi, t - run.apex));
    }
    run.series.truncated = full.truncated;
    const std::size_t cnt = run.series.values.size();
    if (cnt >= 4) {
      const std::size_t q = cnt - cnt / 4;
      double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
      for (std::size_t m = q; m < cnt; ++m) {
        lo = std::min(lo, run.series.values[m]);
        hi = std::max(hi, run.series.values[m]);
        sum += run.series.values[m];
      }
      const double mean = sum / static_cast<double>(cnt - q);
      run.late_inf = lo;
      run.stabilized = mean != 0.0 && (hi - lo) / std::abs(mean) < 0.05;
      run.surplus = lo - rep.base_radiation;
    }
    const bool returned = run.scatter.kind == ScatterKind::scatter_to &&
                          steadies.at(run.scatter.index).nodes == steady.nodes &&
                          std::abs(steadies.at(run.scatter.index).a - steady.a) < 1e-9 * std::abs(steady.a);
    const bool left = run.scatter.kind == ScatterKind::departed ||
                      (run.scatter.kind == ScatterKind::scatter_to && !returned);
    run.verdict = run.surplus > 0.0 && run.stabilized && left ? "NO-RETURN" : "INCONCLUSIVE";
    rep.runs.push_back(std::move(run));
  }

  double lo = std::numeric_limits<double>::infinity(), hi = 0.0, sum = 0.0;
  int cnt = 0;
  for (const auto& r : rep.runs) {
    if (!r.exited || !(r.surplus > 0.0)) continue;
    lo = std::min(lo, r.surplus);
    hi = std::max(hi, r.surplus);
    sum += r.surplus;
    ++cnt;
  }
  rep.surplus_spread = cnt > 0 ? (hi - lo) / (sum / cnt) : 0.0;
  return rep;
}

}  // namespace wavelab
