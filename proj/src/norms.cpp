#include "wavelab/norms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wavelab/errors.hpp"

namespace wavelab {
namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

}  // namespace

double shell_integral(std::span<const double> g, const RadialGrid& grid, double a, double b) {
  a = std::max(a, 0.0);
  const double dr = grid.dr();
  double total = 0.0;
  const std::size_t j0 = grid.index_at_or_below(a);
  for (std::size_t j = j0; j + 1 < g.size(); ++j) {
    const double left = grid.r(j);
    const double right = grid.r(j + 1);
    if (left >= b) break;
    const double lo = std::max(left, a);
    const double hi = std::min(right, b);
    if (hi <= lo) continue;
    const double g_lo = g[j] + (g[j + 1] - g[j]) * (lo - left) / dr;
    const double g_hi = g[j] + (g[j + 1] - g[j]) * (hi - left) / dr;
    total += 0.5 * (hi - lo) * (g_lo + g_hi);
  }
  return total;
}

namespace {

std::vector<double> radial_derivative(const Field& u) {
  const std::size_t n = u.size();
  const double dr = u.grid().dr();
  std::vector<double> du(n);
  du[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dr);
  du[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * dr);
  for (std::size_t j = 1; j + 1 < n; ++j) du[j] = (u[j + 1] - u[j - 1]) / (2.0 * dr);
  return du;
}

std::vector<double> cell_volumes(const RadialGrid& grid) {
  std::vector<double> vol(grid.size());
  const double h = 0.5 * grid.dr();
  for (std::size_t j = 0; j < vol.size(); ++j) {
    const double a = std::max(0.0, grid.r(j) - h);
    const double b = std::min(grid.r_max(), grid.r(j) + h);
    vol[j] = kFourPi / 3.0 * (b * b * b - a * a * a);
  }
  return vol;
}

double time_norm(const SpaceTimeField& field, std::size_t j, double r_t) {
  const std::size_t m = field.size();
  if (m == 1 || std::isinf(r_t)) {
    double s = 0.0;
    for (const auto& frame : field.frames) s = std::max(s, std::abs(frame[j]));
    return s;
  }
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < m; ++k) {
    const double h = std::abs(field.times[k + 1] - field.times[k]);
    acc += 0.5 * h * (std::pow(std::abs(field.frames[k][j]), r_t) + std::pow(std::abs(field.frames[k + 1][j]), r_t));
  }
  return std::pow(acc, 1.0 / r_t);
}

}  // namespace

std::vector<double> volume_weights(const RadialGrid& grid) {
  std::vector<double> w(grid.size());
  const double dr = grid.dr();
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = kFourPi * grid.r(j) * grid.r(j) * dr;
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

double inner(const Field& f, const Field& g) {
  require_same_grid(f.grid(), g.grid(), "inner");
  const auto w = volume_weights(f.grid());
  double s = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * f[j] * g[j];
  return s;
}

double l2_norm(const Field& f) { return std::sqrt(inner(f, f)); }

double lp_norm(const Field& f, double p) {
  if (!(p > 0.0)) throw ArgumentError("lp_norm: p must be positive");
  if (std::isinf(p)) return f.max_abs();
  const auto vol = cell_volumes(f.grid());
  double s = 0.0;
  for (std::size_t j = 0; j < vol.size(); ++j) s += vol[j] * std::pow(std::abs(f[j]), p);
  return std::pow(s, 1.0 / p);
}

double energy(const State& state, const Potential& potential) {
  require_same_grid(state.grid(), potential.grid(), "energy");
  const auto& grid = state.grid();
  const std::size_t n = grid.size() - 1;
  const double dr = grid.dr();
  const auto v = state.position.rv();

  double grad = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double d = v[j + 1] - v[j];
    grad += d * d;
  }
  grad = kFourPi * (grad / (2.0 * dr) - v[n] * v[n] / (2.0 * grid.r(n)));

  const auto w = volume_weights(grid);
  double rest = 0.0;
  for (std::size_t j = 0; j <= n; ++j) {
    const double u = state.position[j];
    const double ut = state.velocity[j];
    const double u2 = u * u;
    rest += w[j] * (0.5 * ut * ut - 0.5 * potential[j] * u2 + u2 * u2 * u2 / 6.0);
  }
  return grad + rest;
}

double energy_norm(const State& state, double r_lo, double r_hi) {
  const auto& grid = state.grid();
  if (!(r_lo >= 0.0) || !(r_hi <= grid.r_max() * (1.0 + 1e-14)) || !(r_lo < r_hi))
    throw ArgumentError("energy_norm: need 0 <= r_lo < r_hi <= r_max");
  const auto du = radial_derivative(state.position);
  std::vector<double> g(grid.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double r = grid.r(j);
    g[j] = kFourPi * r * r * (du[j] * du[j] + state.velocity[j] * state.velocity[j]);
  }
  return std::sqrt(shell_integral(g, grid, r_lo, std::min(r_hi, grid.r_max())));
}

double energy_norm(const State& state) { return energy_norm(state, 0.0, state.grid().r_max()); }

double lorentz_norm(const Field& f, double p, double q) {
  if (!(p > 0.0)) throw ArgumentError("lorentz_norm: p must be positive");
  if (!(q > 0.0)) throw ArgumentError("lorentz_norm: q must be positive");
  if (std::isinf(p)) {
    if (!std::isinf(q)) throw ArgumentError("lorentz_norm: L^{inf,q} with finite q is trivial");
    return f.max_abs();
  }
  const auto vol = cell_volumes(f.grid());
  std::vector<std::pair<double, double>> cells;
  cells.reserve(vol.size());
  for (std::size_t j = 0; j < vol.size(); ++j) {
    const double a = std::abs(f[j]);
    if (!std::isfinite(a)) throw NumericalError("lorentz_norm: non-finite sample");
    if (a > 0.0) cells.emplace_back(a, vol[j]);
  }
  if (cells.empty()) return 0.0;
  std::sort(cells.begin(), cells.end(), [](const auto& x, const auto& y) { return x.first > y.first; });

  // mu{|f| >= lambda} = W_i for lambda in (a_{i+1}, a_i].
  double measure = 0.0;
  if (std::isinf(q)) {
    double best = 0.0;
    for (const auto& [a, w] : cells) {
      measure += w;
      best = std::max(best, a * std::pow(measure, 1.0 / p));
    }
    return best;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    measure += cells[i].second;
    const double next = i + 1 < cells.size() ? cells[i + 1].first : 0.0;
    acc += std::pow(measure, q / p) * (std::pow(cells[i].first, q) - std::pow(next, q));
  }
  return std::pow(p, 1.0 / q) * std::pow(acc / q, 1.0 / q);
}

double reversed_norm(const SpaceTimeField& field, double p, double q, double r_t) {
  if (field.empty()) throw ArgumentError("reversed_norm: empty trajectory");
  if (!(r_t > 0.0)) throw ArgumentError("reversed_norm: temporal exponent must be positive");
  field.validate();
  const auto& grid = field.grid();
  Field profile(grid);
  for (std::size_t j = 0; j < grid.size(); ++j) profile[j] = time_norm(field, j, r_t);
  return lorentz_norm(profile, p, q);
}

double strichartz_norm(const SpaceTimeField& field) {
  if (field.empty()) throw ArgumentError("strichartz_norm: empty trajectory");
  field.validate();
  const auto w = volume_weights(field.grid());
  std::vector<double> slice(field.size());
  for (std::size_t k = 0; k < field.size(); ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double u2 = field.frames[k][j] * field.frames[k][j];
      const double u4 = u2 * u2;
      s += w[j] * u4 * u4 * u2;
    }
    slice[k] = std::sqrt(s);  // ||u(t)||_{L^10}^5
  }
  if (field.size() == 1) return std::pow(slice[0], 0.2);
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < slice.size(); ++k)
    acc += 0.5 * std::abs(field.times[k + 1] - field.times[k]) * (slice[k] + slice[k + 1]);
  return std::pow(acc, 0.2);
}

}  // namespace wavelab
