#include "wavelab/manifold.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <thread>

#include "wavelab/errors.hpp"
#include "wavelab/norms.hpp"

namespace wavelab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double slope(const std::vector<double>& t, const std::vector<double>& y) {
  const double n = static_cast<double>(t.size());
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    st += t[i];
    sy += y[i];
    stt += t[i] * t[i];
    sty += t[i] * y[i];
  }
  const double den = n * stt - st * st;
  return den > 0.0 ? (n * sty - st * sy) / den : kNaN;
}

std::vector<double> ks(const Spectrum& spectrum) {
  std::vector<double> k(spectrum.size());
  for (std::size_t i = 0; i < k.size(); ++i) k[i] = spectrum.k[i];
  return k;
}

EvolveConfig shoot_run_config(const ShootConfig& cfg, double T, double t_end, double departure) {
  EvolveConfig c;
  c.cfl = cfg.cfl;
  c.t0 = T;
  c.t_end = t_end;
  c.kind = FlowKind::nonlinear;
  c.record_every = cfg.record_every;
  c.series_every = 1;
  c.track_energy = false;
  c.stop_lambda = departure;
  return c;
}

double effective_departure(const ShootConfig& cfg, const CsData& cs) {
  return std::clamp(cfg.departure_factor * cs_size(cs), cfg.departure_floor, cfg.departure_cap);
}

}  // namespace

CsData make_cs(const Spectrum& spectrum, std::vector<double> lambdas, const State& remainder, double T) {
  if (lambdas.size() != spectrum.size())
    throw DimensionError("make_cs: need one lambda per unstable mode");
  CsData cs;
  cs.lambdas = std::move(lambdas);
  cs.remainder = spectrum.size() ? project(spectrum, remainder).remainder : remainder;
  cs.T = T;
  return cs;
}

CsData zero_cs(const Spectrum& spectrum, double T) {
  return make_cs(spectrum, std::vector<double>(spectrum.size(), 0.0), State(Field(spectrum.grid), Field(spectrum.grid)), T);
}

double cs_size(const CsData& cs) {
  double s = energy_norm(cs.remainder);
  for (double l : cs.lambdas) s += std::abs(l);
  return s;
}

double cs_orthogonality(const Spectrum& spectrum, const CsData& cs) {
  double worst = 0.0;
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    worst = std::max(worst, std::abs(inner(spectrum.modes[i], cs.remainder.position)));
    worst = std::max(worst, std::abs(inner(spectrum.modes[i], cs.remainder.velocity)));
  }
  return worst;
}

CsData scaled(const CsData& cs, double s) {
  CsData out = cs;
  for (auto& l : out.lambdas) l *= s;
  out.remainder = State(s * cs.remainder.position, s * cs.remainder.velocity);
  return out;
}

State cs_state(const Field& phi, const Spectrum& spectrum, const CsData& cs, const std::vector<double>& lambda_dots) {
  if (lambda_dots.size() != spectrum.size() || cs.lambdas.size() != spectrum.size())
    throw DimensionError("cs_state: mode count mismatch");
  Field u = phi + cs.remainder.position;
  Field ut = cs.remainder.velocity;
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    u += cs.lambdas[i] * spectrum.modes[i];
    ut += lambda_dots[i] * spectrum.modes[i];
  }
  return State(std::move(u), std::move(ut));
}

double default_t_cut(const Spectrum& spectrum, double T) {
  double k_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < spectrum.size(); ++i) k_min = std::min(k_min, spectrum.k[i]);
  return T + std::max(std::isfinite(k_min) ? 10.0 / k_min : 0.0, 20.0);
}

VelocityEstimate stability_velocity(const CsData& cs, const Trajectory& traj, const Spectrum& spectrum,
                                    double t_cut, VelocityRule rule) {
  if (t_cut < cs.T) throw ArgumentError("stability_velocity: t_cut before T");
  if (traj.n_rho.size() != spectrum.size() || traj.times.empty())
    throw ArgumentError("stability_velocity: trajectory carries no mode samples for this spectrum");
  if (std::abs(traj.times.front() - cs.T) > 1e-9 * std::max(1.0, std::abs(cs.T)))
    throw ArgumentError("stability_velocity: trajectory must start at T");
  const int stride = traj.config.series_every;
  if (rule == VelocityRule::leapfrog && stride != 1)
    throw ArgumentError("stability_velocity: the leapfrog rule needs a sample at every step");

  const double dt = traj.dt * stride;
  std::size_t last = 0;
  while (last + 1 < traj.times.size() && traj.times[last + 1] <= t_cut + 1e-12) ++last;

  VelocityEstimate out;
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    const double k = spectrum.k[i];
    const auto& N = traj.n_rho[i];
    double lin, integral = 0.0, decay_at_last;
    if (rule == VelocityRule::leapfrog) {
      // discrete mode recursion l^{m+1} - 2 l^m + l^{m-1} = dt^2 (k^2 l^m + N^m) with the Taylor start
      const double c = 1.0 + 0.5 * k * k * dt * dt;
      const double sh = std::sqrt(c * c - 1.0);
      const double z = c - sh;
      lin = -(sh / dt) * cs.lambdas[i];
      double w = 1.0;
      integral = 0.5 * N[0];
      for (std::size_t m = 1; m <= last; ++m) {
        w *= z;
        integral += w * N[m];
      }
      integral *= dt;
      decay_at_last = w;
    } else {
      lin = -k * cs.lambdas[i];
      for (std::size_t m = 0; m < last; ++m) {
        const double a = std::exp(k * (cs.T - traj.times[m])) * N[m];
        const double b = std::exp(k * (cs.T - traj.times[m + 1])) * N[m + 1];
        integral += 0.5 * (a + b) * (traj.times[m + 1] - traj.times[m]);
      }
      decay_at_last = std::exp(k * (cs.T - traj.times[last]));
    }
    double sup = 0.0;
    for (std::size_t m = last - last / 10; m <= last; ++m) sup = std::max(sup, std::abs(N[m]));
    out.linear.push_back(lin);
    out.integral.push_back(integral);
    out.lambda_dot.push_back(lin - integral);
    out.tail_bound.push_back(decay_at_last * sup / k);
  }
  return out;
}

namespace {

void fill_diagnostics(ShootResult& res, const CsData& cs, const Field& phi, const Spectrum& spectrum) {
  const auto& tr = res.trajectory;
  const double size = cs_size(cs);
  res.window_end = tr.times.back();
  if (size > 0.0) {
    for (std::size_t m = 0; m < tr.times.size(); ++m) {
      bool out = false;
      for (const auto& l : tr.lambda) out = out || std::abs(l[m]) > 2.0 * size;
      if (out) {
        res.window_end = tr.times[m];
        break;
      }
    }
  }
  double x = 0.0;
  for (const auto& l : tr.lambda) {
    double sup = 0.0, l2 = 0.0;
    for (std::size_t m = 0; m < l.size() && tr.times[m] <= res.window_end; ++m) {
      sup = std::max(sup, std::abs(l[m]));
      if (m > 0) l2 += 0.5 * (l[m] * l[m] + l[m - 1] * l[m - 1]) * std::abs(tr.times[m] - tr.times[m - 1]);
    }
    x += std::max(sup, std::sqrt(l2));
  }
  SpaceTimeField gamma;
  for (std::size_t f = 0; f < tr.u.size() && tr.u.times[f] <= res.window_end; ++f) {
    Field g = tr.u.frames[f] - phi;
    for (std::size_t i = 0; i < spectrum.size(); ++i) g -= inner(spectrum.modes[i], g) * spectrum.modes[i];
    gamma.push_back(tr.u.times[f], std::move(g));
  }
  if (!gamma.empty()) x += reversed_norm(gamma, 6.0, 2.0, kInfinity);
  res.x_norm = x;
}

}  // namespace

ShootResult lp_shoot(const CsData& cs, const Potential& potential, const SteadyState& steady,
                     const Spectrum& spectrum, const ShootConfig& cfg) {
  const std::size_t n = spectrum.size();
  if (n == 0) throw ArgumentError("lp_shoot: no unstable modes");
  if (cs.lambdas.size() != n) throw DimensionError("lp_shoot: mode count mismatch");
  const double size = cs_size(cs);
  if (size > cfg.budget) throw ArgumentError("lp_shoot: data exceed the configured budget");
  const double t_cut = cfg.t_cut > 0.0 ? cfg.t_cut : default_t_cut(spectrum, cs.T);
  if (!(t_cut > cs.T)) throw ArgumentError("lp_shoot: t_cut must exceed T");
  const auto k = ks(spectrum);
  const auto run_cfg = shoot_run_config(cfg, cs.T, t_cut, effective_departure(cfg, cs));

  ShootResult res;
  res.t_cut = t_cut;
  std::vector<double> g(n), g_prev, r_prev;
  for (std::size_t i = 0; i < n; ++i) g[i] = -k[i] * cs.lambdas[i];

  for (int it = 0; it < cfg.max_iter; ++it) {
    res.trajectory = evolve(cs_state(steady.profile, spectrum, cs, g), potential, &steady, &spectrum, run_cfg);
    const auto F = stability_velocity(cs, res.trajectory, spectrum, t_cut, cfg.rule).lambda_dot;
    std::vector<double> R(n);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      R[i] = F[i] - g[i];
      worst = std::max(worst, std::abs(R[i]));
    }
    res.history.push_back(g);
    res.residuals.push_back(worst);
    res.iterations = it + 1;
    if (!std::isfinite(worst)) break;
    if (worst <= cfg.tol) {
      res.converged = true;
      res.history.back() = F;
      break;
    }
    std::vector<double> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      double step = R[i];
      if (it < cfg.damped_iters) {
        step *= cfg.damping;
      } else if (!g_prev.empty()) {
        const double dR = R[i] - r_prev[i];
        if (dR != 0.0) step = -R[i] * (g[i] - g_prev[i]) / dR;
      }
      next[i] = g[i] + step;
    }
    g_prev = g;
    r_prev = R;
    g = next;
  }
  res.lambda_dots = res.history.back();
  fill_diagnostics(res, cs, steady.profile, spectrum);
  return res;
}

int departure_sign(const CsData& cs, const std::vector<double>& lambda_dots, const Potential& potential,
                   const SteadyState& steady, const Spectrum& spectrum, const ShootConfig& cfg) {
  const double t_cut = cfg.t_cut > 0.0 ? cfg.t_cut : default_t_cut(spectrum, cs.T);
  auto run_cfg = shoot_run_config(cfg, cs.T, t_cut, effective_departure(cfg, cs));
  run_cfg.record_every = 0;
  const auto tr = evolve(cs_state(steady.profile, spectrum, cs, lambda_dots), potential, &steady, &spectrum, run_cfg);
  if (tr.status != RunStatus::stopped) return 0;
  return tr.lambda[0].back() > 0.0 ? 1 : -1;
}

BisectionResult bisection_oracle(const CsData& cs, const Potential& potential, const SteadyState& steady,
                                 const Spectrum& spectrum, const ShootConfig& cfg, double resolution,
                                 double half_width) {
  if (spectrum.size() != 1) throw ArgumentError("bisection_oracle: needs exactly one unstable mode");
  const double k = spectrum.k[0];
  const double center = -k * cs.lambdas[0];
  const double w = half_width > 0.0 ? half_width
                                    : std::max(1e-6, k * std::abs(cs.lambdas[0]) + energy_norm(cs.remainder));
  BisectionResult out;
  out.lo = center - w;
  out.hi = center + w;
  auto sign = [&](double v) {
    ++out.evaluations;
    return departure_sign(cs, {v}, potential, steady, spectrum, cfg);
  };
  if (sign(out.lo) != -1 || sign(out.hi) != 1)
    throw BracketError("bisection_oracle: bracket ends do not depart in opposite directions");
  while (out.hi - out.lo > resolution) {
    const double mid = 0.5 * (out.lo + out.hi);
    if (mid <= out.lo || mid >= out.hi) break;
    const int s = sign(mid);
    if (s == 0) {
      out.lo = out.hi = mid;
      break;
    }
    (s > 0 ? out.hi : out.lo) = mid;
  }
  out.threshold = 0.5 * (out.lo + out.hi);
  return out;
}

GrowthReport growth_experiment(const State& h0, const Potential& potential, const SteadyState& steady,
                               const Spectrum& spectrum, double T, double K, double cfl) {
  const std::size_t n = spectrum.size();
  if (n == 0) throw ArgumentError("growth_experiment: no unstable modes");
  double k1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) k1 = std::max(k1, spectrum.k[i]);
  if (std::exp(3.0 * k1 * T) * energy_norm(h0) > 0.1)
    throw ArgumentError("growth_experiment: e^{3 k1 T} ||h0|| exceeds 0.1");

  EvolveConfig c;
  c.cfl = cfl;
  c.t_end = T;
  c.record_every = 5;
  c.series_every = 5;
  c.track_energy = false;
  const auto tr = evolve(State(steady.profile + h0.position, h0.velocity), potential, &steady, &spectrum, c);

  GrowthReport rep;
  rep.K = K;
  rep.times = tr.times;
  rep.mu_plus.assign(n, {});
  rep.mu_minus.assign(n, {});
  std::vector<double> mode_norm(n);
  for (std::size_t i = 0; i < n; ++i)
    mode_norm[i] = energy_norm(State(spectrum.modes[i], spectrum.k[i] * spectrum.modes[i]));
  for (std::size_t m = 0; m < tr.times.size(); ++m) {
    Field rp = tr.u.frames[m] - steady.profile;
    Field rv = tr.ut.frames[m];
    for (std::size_t i = 0; i < n; ++i) {
      const auto [mp, mm] = hyperbolic_coords(tr.lambda[i][m], tr.lambda_dot[i][m], spectrum.k[i]);
      rep.mu_plus[i].push_back(mp);
      rep.mu_minus[i].push_back(mm);
      rp -= tr.lambda[i][m] * spectrum.modes[i];
      rv -= tr.lambda_dot[i][m] * spectrum.modes[i];
    }
    rep.remainder_norm.push_back(energy_norm(State(std::move(rp), std::move(rv))));
  }
  for (std::size_t i = 0; i < n; ++i) {
    rep.initial_mu_plus.push_back(rep.mu_plus[i].front());
    std::vector<double> t, y;
    for (std::size_t m = 0; m < rep.times.size(); ++m) {
      if (rep.mu_plus[i][m] == 0.0) continue;
      t.push_back(rep.times[m]);
      y.push_back(std::log(std::abs(rep.mu_plus[i][m])));
    }
    rep.fitted_rates.push_back(t.size() >= 2 ? slope(t, y) : kNaN);
  }

  for (std::size_t m = 0; m < rep.times.size(); ++m) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(rep.mu_plus[i][m]) * mode_norm[i] > std::abs(rep.mu_plus[best][m]) * mode_norm[best]) best = i;
    double rest = rep.remainder_norm[m];
    for (std::size_t i = 0; i < n; ++i) {
      rest += std::abs(rep.mu_minus[i][m]) * mode_norm[i];
      if (i != best) rest += std::abs(rep.mu_plus[i][m]) * mode_norm[i];
    }
    if (std::abs(rep.mu_plus[best][m]) * mode_norm[best] >= K * rest) {
      rep.t_dom = rep.times[m];
      rep.dominant_mode = best;
      const double shape = std::exp(spectrum.k[best] * (rep.times[m] - rep.times.front())) *
                           std::abs(rep.initial_mu_plus[best]) * mode_norm[best] / K;
      rep.remainder_bound_ratio = shape > 0.0 ? rep.remainder_norm[m] / shape : kNaN;
      break;
    }
  }
  return rep;
}

ChartTable chart_sample(const std::vector<double>& lambdas, const std::vector<double>& amplitudes,
                        const State& remainder_shape, const Potential& potential, const SteadyState& steady,
                        const Spectrum& spectrum, const ShootConfig& cfg, int workers) {
  const std::size_t nl = lambdas.size(), na = amplitudes.size();
  ChartTable tab;
  tab.lambdas = lambdas;
  tab.amplitudes = amplitudes;
  tab.lambda_dot.assign(nl, std::vector<double>(na, kNaN));
  tab.converged.assign(nl, std::vector<bool>(na, false));
  const auto shape = project(spectrum, remainder_shape).remainder;

  std::vector<double> value(nl * na, kNaN);
  std::vector<char> ok(nl * na, 0);
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t idx = next++; idx < nl * na; idx = next++) {
      const std::size_t i = idx / na, j = idx % na;
      std::vector<double> l(spectrum.size(), 0.0);
      l[0] = lambdas[i];
      CsData cs;
      cs.lambdas = l;
      cs.remainder = State(amplitudes[j] * shape.position, amplitudes[j] * shape.velocity);
      try {
        const auto r = lp_shoot(cs, potential, steady, spectrum, cfg);
        ok[idx] = r.converged;
        value[idx] = r.lambda_dots[0];
      } catch (const std::exception&) {
        ok[idx] = 0;
      }
    }
  };
  const int nw = std::max(1, workers);
  std::vector<std::thread> pool;
  for (int w = 1; w < nw; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  for (std::size_t i = 0; i < nl; ++i)
    for (std::size_t j = 0; j < na; ++j) {
      tab.converged[i][j] = ok[i * na + j] != 0;
      if (ok[i * na + j]) tab.lambda_dot[i][j] = value[i * na + j];
    }

  // gradient in lambda along the amplitude-zero row, from the two samples straddling 0
  std::size_t j0 = 0;
  for (std::size_t j = 1; j < na; ++j)
    if (std::abs(amplitudes[j]) < std::abs(amplitudes[j0])) j0 = j;
  std::optional<std::size_t> ip, in;
  for (std::size_t i = 0; i < nl; ++i) {
    if (lambdas[i] > 0.0 && (!ip || lambdas[i] < lambdas[*ip])) ip = i;
    if (lambdas[i] < 0.0 && (!in || lambdas[i] > lambdas[*in])) in = i;
  }
  tab.gradient_at_zero = kNaN;
  if (na && ip && in && tab.converged[*ip][j0] && tab.converged[*in][j0])
    tab.gradient_at_zero = (tab.lambda_dot[*ip][j0] - tab.lambda_dot[*in][j0]) / (lambdas[*ip] - lambdas[*in]);

  for (std::size_t i = 0; i < nl; ++i)
    for (std::size_t j = 0; j < na; ++j)
      for (std::size_t i2 = 0; i2 < nl; ++i2)
        for (std::size_t j2 = 0; j2 < na; ++j2)
          if (lambdas[i2] == -lambdas[i] && amplitudes[j2] == -amplitudes[j] && tab.converged[i][j] &&
              tab.converged[i2][j2])
            tab.odd_defect = std::max(tab.odd_defect, std::abs(tab.lambda_dot[i][j] + tab.lambda_dot[i2][j2]));

  if (nl >= 3 && na >= 3) {
    double first = 0.0;
    for (std::size_t i = 0; i + 1 < nl; ++i)
      for (std::size_t j = 0; j < na; ++j)
        first = std::max(first, std::abs(tab.lambda_dot[i + 1][j] - tab.lambda_dot[i][j]));
    for (std::size_t i = 0; i < nl; ++i)
      for (std::size_t j = 0; j + 1 < na; ++j)
        first = std::max(first, std::abs(tab.lambda_dot[i][j + 1] - tab.lambda_dot[i][j]));
    auto mixed = [&](std::size_t i, std::size_t j) {
      return tab.lambda_dot[i + 1][j + 1] - tab.lambda_dot[i + 1][j] - tab.lambda_dot[i][j + 1] + tab.lambda_dot[i][j];
    };
    double jump = 0.0;
    for (std::size_t i = 0; i + 2 < nl; ++i)
      for (std::size_t j = 0; j + 2 < na; ++j) {
        jump = std::max(jump, std::abs(mixed(i + 1, j) - mixed(i, j)));
        jump = std::max(jump, std::abs(mixed(i, j + 1) - mixed(i, j)));
      }
    tab.mixed_jump = first > 0.0 ? jump / first : 0.0;
  }
  return tab;
}

double contraction_radius(const CsData& direction, const Potential& potential, const SteadyState& steady,
                          const Spectrum& spectrum, ShootConfig cfg, double s_max, double rel) {
  cfg.budget = std::numeric_limits<double>::infinity();
  auto converges = [&](double s) {
    try {
      return lp_shoot(scaled(direction, s), potential, steady, spectrum, cfg).converged;
    } catch (const std::exception&) {
      return false;
    }
  };
  if (converges(s_max)) return s_max;
  double lo = 0.0, hi = s_max;
  while (hi - lo > rel * hi) {
    const double mid = 0.5 * (lo + hi);
    (converges(mid) ? lo : hi) = mid;
  }
  return lo;
}

std::vector<DepartureRun> off_manifold_departure(const CsData& cs, const ShootResult& base,
                                                 const std::vector<double>& deltas, double eps1,
                                                 const Potential& potential, const SteadyState& steady,
                                                 const Spectrum& spectrum, const ShootConfig& cfg) {
  const double k = spectrum.k[0];
  const auto& on = base.trajectory;
  std::vector<DepartureRun> out;
  for (double delta : deltas) {
    auto v = base.lambda_dots;
    v[0] += delta;
    auto c = shoot_run_config(cfg, cs.T, base.t_cut, 0.0);
    c.record_every = 0;
    c.stop_norm = eps1;
    const auto tr = evolve(cs_state(steady.profile, spectrum, cs, v), potential, &steady, &spectrum, c);
    DepartureRun run;
    run.delta = delta;
    run.exit_time = kNaN;
    const std::size_t last = tr.times.size() - 1;
    if (tr.status == RunStatus::stopped && last > 0) {
      const double a = tr.h_norm[last - 1], b = tr.h_norm[last];
      const double w = b > a ? (eps1 - a) / (b - a) : 1.0;
      run.exit_time = tr.times[last - 1] + w * (tr.times[last] - tr.times[last - 1]);
    }
    // log-linear fit of the mu+ separation from one growth time in until a tenth of the exit level
    std::vector<double> t, y;
    for (std::size_t m = 0; m <= last; ++m) {
      if (tr.times[m] < cs.T + 1.0 / k) continue;
      if (tr.h_norm[m] > 0.1 * eps1) break;
      double mp = hyperbolic_coords(tr.lambda[0][m], tr.lambda_dot[0][m], k).first;
      if (m < on.times.size()) mp -= hyperbolic_coords(on.lambda[0][m], on.lambda_dot[0][m], k).first;
      if (mp == 0.0) continue;
      t.push_back(tr.times[m]);
      y.push_back(std::log(std::abs(mp)));
    }
    run.fitted_rate = t.size() >= 2 ? slope(t, y) : kNaN;
    out.push_back(run);
  }
  return out;
}

std::vector<RemainderDraw> remainder_draws(int count, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  // explicit mapping so the draws do not depend on the standard library's distributions
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * static_cast<double>(gen() >> 11) * 0x1p-53; };
  std::vector<RemainderDraw> out(static_cast<std::size_t>(std::max(count, 0)));
  for (auto& d : out) {
    for (int m = 0; m < 3; ++m) {
      d.pos_amp.push_back(uniform(-1.0, 1.0));
      d.vel_amp.push_back(uniform(-1.0, 1.0));
      d.center.push_back(uniform(1.0, 8.0));
      d.width.push_back(uniform(0.75, 3.0));
    }
  }
  return out;
}

StrichartzEnsemble reversed_strichartz_ensemble(const std::vector<RemainderDraw>& draws, const Potential& potential,
                                                const SteadyState& steady, const Spectrum& spectrum, double t_end,
                                                int workers) {
  const auto& grid = potential.grid();
  StrichartzEnsemble out;
  out.ratios.assign(draws.size(), kNaN);
  std::atomic<std::size_t> next{0};
  std::vector<std::string> errors(draws.size());
  auto work = [&]() {
    for (std::size_t idx = next++; idx < draws.size(); idx = next++) {
      const auto& d = draws[idx];
      auto shape = [&](const std::vector<double>& amp) {
        return Field::from_function(grid, [&](double r) {
          double s = 0.0;
          for (std::size_t m = 0; m < amp.size(); ++m) {
            const double x = (r - d.center[m]) / d.width[m];
            if (std::abs(x) < 1.0) s += amp[m] * std::exp(1.0 - 1.0 / (1.0 - x * x));
          }
          return s;
        });
      };
      const auto gamma = project(spectrum, State(shape(d.pos_amp), shape(d.vel_amp))).remainder;
      const double size = energy_norm(gamma);
      EvolveConfig c;
      c.kind = FlowKind::linearized;
      c.t_end = t_end;
      c.track_energy = false;
      // a fixed sampling interval in time keeps the sup over t comparable across grids
      c.record_every = std::max(1, static_cast<int>(std::lround(0.05 / (c.cfl * grid.dr()))));
      c.enforce_causal = false;
      try {
        auto tr = evolve(State(steady.profile + gamma.position, gamma.velocity), potential, &steady, nullptr, c);
        SpaceTimeField g = tr.u;
        for (std::size_t m = 0; m < g.size(); ++m) {
          g.frames[m] -= steady.profile;
          const auto pc = project(spectrum, State(g.frames[m], Field(grid)));
          g.frames[m] = pc.remainder.position;
        }
        out.ratios[idx] = reversed_norm(g, 6.0, 2.0, kInfinity) / size;
      } catch (const std::exception& e) {
        errors[idx] = e.what();
      }
    }
  };
  const int nw = std::max(1, workers);
  std::vector<std::thread> pool;
  for (int w = 1; w < nw; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (!e.empty()) throw NumericalError("reversed_strichartz_ensemble: " + e);

  double sum = 0.0;
  for (double r : out.ratios) {
    out.max_ratio = std::max(out.max_ratio, r);
    sum += r;
  }
  out.mean_ratio = draws.empty() ? 0.0 : sum / static_cast<double>(draws.size());
  return out;
}

}  // namespace wavelab
