#include "wavelab/steady_states.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <boost/numeric/odeint.hpp>

#include "tridiagonal.hpp"
#include "wavelab/errors.hpp"
#include "wavelab/norms.hpp"

namespace wavelab {
namespace {

using OdeState = std::array<double, 2>;

double interior_defect(const std::vector<double>& v, const Potential& V, std::size_t j, double dr) {
  const double r = V.grid().r(j);
  const double r2 = r * r;
  const double v2 = v[j] * v[j];
  return (v[j + 1] - 2.0 * v[j] + v[j - 1]) / (dr * dr) + V[j] * v[j] - v2 * v2 * v[j] / (r2 * r2);
}

// Interior defects plus the outer row (v_n - v_{n-1}) / dr^2, which pins r*phi flat at r_max.
std::vector<double> bvp_defect(const std::vector<double>& v, const Potential& V) {
  const std::size_t n = v.size() - 1;
  const double dr = V.grid().dr();
  std::vector<double> F(n);
  for (std::size_t j = 1; j < n; ++j) F[j - 1] = interior_defect(v, V, j, dr);
  F[n - 1] = (v[n] - v[n - 1]) / (dr * dr);
  return F;
}

double sum_squares(const std::vector<double>& x) {
  double s = 0.0;
  for (double y : x) s += y * y;
  return s;
}

void fit_tail(SteadyState& s) {
  const auto& grid = s.profile.grid();
  const auto v = s.profile.rv();
  const std::size_t j0 = grid.index_at_or_below(0.5 * grid.r_max());
  double mean = 0.0;
  for (std::size_t j = j0; j < v.size(); ++j) mean += v[j];
  mean /= static_cast<double>(v.size() - j0);
  double spread = 0.0;
  for (std::size_t j = j0; j < v.size(); ++j) spread = std::max(spread, std::abs(v[j] - mean));
  s.tail_coeff = mean;
  s.tail_spread = spread;
}

bool same_profile(const Field& x, const Field& y) {
  double diff = 0.0, scale = 1.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    diff = std::max(diff, std::abs(x[j] - y[j]));
    scale = std::max(scale, std::abs(x[j]));
  }
  return diff <= 1e-6 * scale;
}

}  // namespace

const char* to_string(EndBehavior b) {
  switch (b) {
    case EndBehavior::decays: return "decays";
    case EndBehavior::diverges_up: return "diverges+";
    case EndBehavior::diverges_down: return "diverges-";
  }
  return "?";
}

int count_nodes(const Field& f) {
  const double floor = 1e-10 * f.max_abs();
  int nodes = 0;
  int last_sign = 0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    if (std::abs(f[j]) <= floor) continue;
    const int sign = f[j] > 0.0 ? 1 : -1;
    if (last_sign != 0 && sign != last_sign) ++nodes;
    last_sign = sign;
  }
  return nodes;
}

ShootProfile shoot(const Potential& potential, double a, const ShootOptions& opt) {
  namespace ode = boost::numeric::odeint;
  if (!std::isfinite(a)) throw ArgumentError("shoot: center value must be finite");
  const auto& grid = potential.grid();
  ShootProfile out;
  out.a = a;
  out.profile = Field(grid);
  const double r_end = opt.r_end > 0.0 ? std::min(opt.r_end, grid.r_max()) : std::min(grid.r_max(), 40.0);
  out.r_stop = r_end;
  if (a == 0.0) return out;

  auto rhs = [&potential](const OdeState& x, OdeState& dx, double r) {
    dx[0] = x[1];
    const double p2 = x[0] * x[0];
    dx[1] = -2.0 / r * x[1] - potential.at(r) * x[0] + p2 * p2 * x[0];
  };

  const double r0 = std::min(1e-4, 0.1 * grid.dr());
  const double c2 = (std::pow(a, 5) - potential.at(0.0) * a) / 6.0;
  OdeState x{a + c2 * r0 * r0, 2.0 * c2 * r0};
  auto stepper = ode::make_dense_output(opt.abs_tol, opt.rel_tol, ode::runge_kutta_dopri5<OdeState>());
  stepper.initialize(x, r0, r0);

  out.profile[0] = a;
  std::size_t next = 1;
  bool diverged = false;
  while (stepper.current_time() < r_end) {
    stepper.do_step(rhs);
    const double t = stepper.current_time();
    const auto& cur = stepper.current_state();
    if (!std::isfinite(cur[0]) || !std::isfinite(cur[1])) throw NumericalError("shoot: non-finite state");
    while (next < grid.size() && grid.r(next) <= std::min(t, r_end)) {
      OdeState y;
      stepper.calc_state(grid.r(next), y);
      out.profile[next] = y[0];
      ++next;
    }
    if (std::abs(t * cur[0]) > opt.guard) {
      diverged = true;
      out.r_stop = t;
      out.behavior = cur[0] > 0.0 ? EndBehavior::diverges_up : EndBehavior::diverges_down;
      break;
    }
  }
  if (!diverged) {
    OdeState y;
    stepper.calc_state(r_end, y);
    const double slope = y[0] + r_end * y[1];  // d(r phi)/dr
    out.behavior = slope > 0.0 ? EndBehavior::diverges_up
                   : slope < 0.0 ? EndBehavior::diverges_down
                                 : EndBehavior::decays;
  }

  // continue past the stopping radius with the c / r tail
  const std::size_t last = next - 1;
  const double c = grid.r(last) * out.profile[last];
  for (std::size_t j = next; j < grid.size(); ++j) out.profile[j] = c / grid.r(j);

  Field reached(grid);
  for (std::size_t j = 0; j <= last; ++j) reached[j] = out.profile[j];
  out.nodes = count_nodes(reached);
  return out;
}

double residual(const Field& phi, const Potential& potential) {
  require_same_grid(phi.grid(), potential.grid(), "residual");
  const auto v = phi.rv();
  const double dr = phi.grid().dr();
  double s = 0.0;
  for (std::size_t j = 1; j + 1 < v.size(); ++j) {
    const double F = interior_defect(v, potential, j, dr);
    s += F * F;
  }
  return std::sqrt(4.0 * std::numbers::pi * dr * s);
}

double residual(const SteadyState& state, const Potential& potential) { return residual(state.profile, potential); }

SteadyState polish(const Field& guess, const Potential& potential, double a, const SteadyOptions& opt) {
  require_same_grid(guess.grid(), potential.grid(), "polish");
  const auto& grid = potential.grid();
  const std::size_t n = grid.size() - 1;
  const double dr = grid.dr();
  const double inv_dr2 = 1.0 / (dr * dr);

  auto v = guess.rv();
  auto F = bvp_defect(v, potential);
  double merit = sum_squares(F);
  int iter = 0;
  for (; iter < opt.newton_max_iter; ++iter) {
    std::vector<double> lower(n - 1, inv_dr2), diag(n), upper(n - 1, inv_dr2);
    for (std::size_t j = 1; j < n; ++j) {
      const double r2 = grid.r(j) * grid.r(j);
      const double v2 = v[j] * v[j];
      diag[j - 1] = -2.0 * inv_dr2 + potential[j] - 5.0 * v2 * v2 / (r2 * r2);
    }
    diag[n - 1] = inv_dr2;
    lower[n - 2] = -inv_dr2;
    std::vector<double> step = F;
    if (!detail::solve_tridiagonal(lower, diag, upper, step)) break;

    double alpha = 1.0;
    std::vector<double> trial(v);
    double trial_merit = 0.0;
    for (;;) {
      for (std::size_t j = 1; j <= n; ++j) trial[j] = v[j] - alpha * step[j - 1];
      trial_merit = sum_squares(bvp_defect(trial, potential));
      if (trial_merit <= merit || alpha < 1e-4) break;
      alpha *= 0.5;
    }
    double change = 0.0, scale = 1.0;
    for (std::size_t j = 1; j <= n; ++j) {
      change = std::max(change, std::abs(trial[j] - v[j]));
      scale = std::max(scale, std::abs(trial[j]));
    }
    if (!(trial_merit <= merit)) break;
    v = std::move(trial);
    merit = trial_merit;
    F = bvp_defect(v, potential);
    if (change <= 1e-14 * scale) {
      ++iter;
      break;
    }
  }

  SteadyState s;
  s.profile = Field::from_rv(grid, v);
  s.a = a;
  s.newton_iterations = iter;
  s.residual = residual(s.profile, potential);
  s.converged = std::isfinite(s.residual) && s.residual <= opt.residual_tol;
  s.nodes = count_nodes(s.profile);
  s.energy = energy(State(s.profile, Field(grid)), potential);
  fit_tail(s);
  return s;
}

std::vector<SteadyState> find_steady_states(const Potential& potential, const SteadyOptions& opt) {
  if (!(opt.a_lo < opt.a_hi) || !(opt.a_step > 0.0)) throw ArgumentError("find_steady_states: bad scan range");
  const auto& grid = potential.grid();

  std::vector<SteadyState> found;
  SteadyState zero;
  zero.profile = Field(grid);
  found.push_back(zero);

  auto add = [&found](SteadyState s) {
    for (const auto& f : found)
      if (same_profile(f.profile, s.profile)) return;
    found.push_back(std::move(s));
  };

  const auto steps = static_cast<long>(std::floor((opt.a_hi - opt.a_lo) / opt.a_step + 1e-9));
  double prev_a = 0.0;
  EndBehavior prev = EndBehavior::decays;
  for (long k = 0; k <= steps; ++k) {
    const double a = opt.a_lo + static_cast<double>(k) * opt.a_step;
    if (a == 0.0) {
      prev = EndBehavior::decays;
      continue;
    }
    const EndBehavior here = shoot(potential, a, opt.shoot).behavior;
    if (k > 0 && prev != EndBehavior::decays && here != EndBehavior::decays && here != prev &&
        (prev_a > 0.0) == (a > 0.0)) {
      double lo = prev_a, hi = a;
      while (hi - lo > opt.bisect_tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (shoot(potential, mid, opt.shoot).behavior == prev ? lo : hi) = mid;
      }
      const double root = 0.5 * (lo + hi);
      auto s = polish(shoot(potential, root, opt.shoot).profile, potential, root, opt);
      if (s.profile.max_abs() > 1e-8 && s.nodes <= opt.max_nodes) {
        SteadyState mirrored = s;
        mirrored.profile = -s.profile;
        mirrored.a = -s.a;
        mirrored.tail_coeff = -s.tail_coeff;
        add(std::move(s));
        add(std::move(mirrored));
      }
    }
    prev_a = a;
    prev = here;
  }

  std::stable_sort(found.begin(), found.end(), [](const SteadyState& x, const SteadyState& y) {
    if (x.energy != y.energy) return x.energy < y.energy;
    return x.a > y.a;
  });
  return found;
}

}  // namespace wavelab
