#include "wavelab/spectral.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <lapacke.h>

#include "wavelab/errors.hpp"
#include "wavelab/norms.hpp"

namespace wavelab {
namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

// Replaces the part of an eigenvector that has sunk into roundoff by the decaying solution
// of the same three-term recurrence, run inward from v_n = 0.
void polish_tail(std::vector<double>& v, const Field& W, double eigenvalue, double dr) {
  const std::size_t n = v.size() - 1;
  double vmax = 0.0;
  for (double x : v) vmax = std::max(vmax, std::abs(x));
  std::size_t jm = 0;
  for (std::size_t j = n; j-- > 0;) {
    if (std::abs(v[j]) >= 1e-8 * vmax) {
      jm = j;
      break;
    }
  }
  if (jm + 2 >= n || jm == 0) return;
  std::vector<double> w(n + 1, 0.0);
  w[n] = 0.0;
  w[n - 1] = 1.0;
  for (std::size_t j = n - 1; j > jm; --j) {
    w[j - 1] = (2.0 + dr * dr * (W[j] - eigenvalue)) * w[j] - w[j + 1];
    if (std::abs(w[j - 1]) > 1e150) {
      for (std::size_t i = j - 1; i <= n; ++i) w[i] *= 1e-150;
    }
  }
  const double scale = v[jm] / w[jm];
  for (std::size_t j = jm + 1; j <= n; ++j) v[j] = scale * w[j];
}

void normalize_and_orient(std::vector<double>& v, double dr) {
  double s = 0.0;
  for (double x : v) s += x * x;
  double norm = std::sqrt(kFourPi * dr * s);
  if (v[1] < 0.0) norm = -norm;
  for (double& x : v) x /= norm;
}

std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double m = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  return {my - slope * mx, slope};
}

}  // namespace

std::vector<double> LinearizedOperator::diagonal() const {
  const std::size_t n = grid.size() - 1;
  const double inv = 1.0 / (grid.dr() * grid.dr());
  std::vector<double> d(n - 1);
  for (std::size_t j = 1; j < n; ++j) d[j - 1] = 2.0 * inv + W[j];
  return d;
}

Field LinearizedOperator::apply(const Field& u) const {
  require_same_grid(grid, u.grid(), "LinearizedOperator::apply");
  const auto v = u.rv();
  const std::size_t n = v.size() - 1;
  const double inv = 1.0 / (grid.dr() * grid.dr());
  std::vector<double> out(n + 1, 0.0);
  for (std::size_t j = 1; j < n; ++j) out[j] = (2.0 * v[j] - v[j + 1] - v[j - 1]) * inv + W[j] * v[j];
  return Field::from_rv(grid, out);
}

LinearizedOperator LinearizedOperator::half_domain() const {
  if (grid.cells() % 2 != 0) throw ArgumentError("half_domain: need an even number of cells");
  RadialGrid half(0.5 * grid.r_max(), grid.cells() / 2);
  Field w(half);
  for (std::size_t j = 0; j < half.size(); ++j) w[j] = W[j];
  return {half, w};
}

LinearizedOperator linearize(const Potential& potential, const Field& phi) {
  require_same_grid(potential.grid(), phi.grid(), "linearize");
  Field W(potential.grid());
  for (std::size_t j = 0; j < W.size(); ++j) {
    const double p2 = phi[j] * phi[j];
    W[j] = -potential[j] + 5.0 * p2 * p2;
  }
  return {potential.grid(), W};
}

LinearizedOperator linearize(const Potential& potential, const SteadyState& steady) {
  return linearize(potential, steady.profile);
}

double default_gap(const RadialGrid& grid) {
  const double b = std::numbers::pi / grid.r_max();
  return 10.0 * b * b;
}

Spectrum negative_spectrum(const LinearizedOperator& op) { return negative_spectrum(op, default_gap(op.grid)); }

Spectrum negative_spectrum(const LinearizedOperator& op, double gap) {
  const auto& grid = op.grid;
  const std::size_t n = grid.size() - 1;
  const auto m = static_cast<lapack_int>(n - 1);
  auto d = op.diagonal();
  std::vector<double> e(n - 2, op.off_diagonal());

  double lowest = std::numeric_limits<double>::infinity();
  for (double x : d) lowest = std::min(lowest, x);
  const double vl = lowest - 2.0 * std::abs(op.off_diagonal()) - 1.0;

  Spectrum out;
  out.grid = grid;
  out.gap = gap;
  if (!(vl < 0.0)) return out;

  std::vector<double> w(n - 1);
  std::vector<lapack_int> iblock(n - 1), isplit(n - 1);
  lapack_int found = 0, nsplit = 0;
  const double abstol = 2.0 * LAPACKE_dlamch('S');
  lapack_int info = LAPACKE_dstebz('V', 'B', m, vl, 0.0, 0, 0, abstol, d.data(), e.data(), &found, &nsplit,
                                   w.data(), iblock.data(), isplit.data());
  if (info != 0) throw NumericalError("negative_spectrum: dstebz failed");
  if (found == 0) return out;

  std::vector<double> z(static_cast<std::size_t>(m) * static_cast<std::size_t>(found));
  std::vector<lapack_int> ifail(static_cast<std::size_t>(found));
  info = LAPACKE_dstein(LAPACK_COL_MAJOR, m, d.data(), e.data(), found, w.data(), iblock.data(), isplit.data(),
                        z.data(), m, ifail.data());
  if (info != 0) throw NumericalError("negative_spectrum: dstein failed");

  std::vector<std::size_t> order(static_cast<std::size_t>(found));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&w](std::size_t a, std::size_t b) { return w[a] < w[b]; });

  for (std::size_t i : order) {
    const double lam = w[i];
    if (lam >= -gap) {
      out.near_zero.push_back(lam);
      continue;
    }
    std::vector<double> v(n + 1, 0.0);
    for (std::size_t j = 1; j < n; ++j) v[j] = z[i * static_cast<std::size_t>(m) + (j - 1)];
    polish_tail(v, op.W, lam, grid.dr());
    normalize_and_orient(v, grid.dr());
    out.eigenvalues.push_back(lam);
    out.k.push_back(std::sqrt(-lam));
    out.modes.push_back(Field::from_rv(grid, v));
  }
  return out;
}

double suggested_r_max(const Spectrum& spectrum, double level) {
  if (spectrum.k.empty()) return spectrum.grid.r_max();
  const double k_min = *std::min_element(spectrum.k.begin(), spectrum.k.end());
  return std::max(spectrum.grid.r_max(), -std::log(level) / k_min);
}

std::vector<double> zero_energy_solution(const LinearizedOperator& op) {
  const std::size_t n = op.grid.size() - 1;
  const double dr2 = op.grid.dr() * op.grid.dr();
  std::vector<double> v(n + 1, 0.0);
  v[1] = 1.0;
  for (std::size_t j = 1; j < n; ++j) {
    v[j + 1] = (2.0 + dr2 * op.W[j]) * v[j] - v[j - 1];
    if (std::abs(v[j + 1]) > 1e150) {
      for (std::size_t i = 0; i <= j + 1; ++i) v[i] *= 1e-150;
    }
  }
  return v;
}

HyperbolicityReport hyperbolicity_check(const LinearizedOperator& op, const Spectrum& spectrum,
                                        double resonance_threshold) {
  HyperbolicityReport rep;
  rep.gap_ok = spectrum.near_zero.empty();
  rep.gap_margin = std::numeric_limits<double>::infinity();
  for (double lam : spectrum.eigenvalues) rep.gap_margin = std::min(rep.gap_margin, std::abs(lam) / spectrum.gap);
  for (double lam : spectrum.near_zero) rep.gap_margin = std::min(rep.gap_margin, std::abs(lam) / spectrum.gap);

  auto resonance = [](const LinearizedOperator& o) {
    const auto v = zero_energy_solution(o);
    const std::size_t n = v.size() - 1;
    std::vector<double> x, y;
    for (std::size_t j = n / 2; j <= n; ++j) {
      x.push_back(o.grid.r(j));
      y.push_back(v[j]);
    }
    const auto [A, B] = fit_line(x, y);
    const double R = o.grid.r_max();
    return std::array<double, 3>{A, B, std::abs(B) * R / (std::abs(A) + std::abs(B) * R)};
  };
  const auto full = resonance(op);
  rep.fit_A = full[0];
  rep.fit_B = full[1];
  rep.resonance_margin = full[2];
  rep.no_resonance = rep.resonance_margin >= resonance_threshold;

  const auto half = op.half_domain();
  const auto half_spec = negative_spectrum(half, spectrum.gap);
  const bool half_no_resonance = resonance(half)[2] >= resonance_threshold;
  rep.stable_under_resize = half_spec.size() == spectrum.size() && half_spec.near_zero.size() == spectrum.near_zero.size() &&
                            half_no_resonance == rep.no_resonance;
  if (half_spec.size() == spectrum.size()) {
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
      const double change = std::abs(half_spec.eigenvalues[i] - spectrum.eigenvalues[i]) / std::abs(spectrum.eigenvalues[i]);
      rep.resize_change = std::max(rep.resize_change, change);
    }
    if (rep.resize_change > 1e-3) rep.stable_under_resize = false;
  } else {
    rep.resize_change = std::numeric_limits<double>::infinity();
  }

  rep.pass = rep.gap_ok && rep.no_resonance && rep.stable_under_resize;
  rep.note = "radial sector only: necessary, not sufficient, for hyperbolicity of the full operator";
  return rep;
}

ModeCoords project(const Spectrum& spectrum, const State& state) {
  require_same_grid(spectrum.grid, state.grid(), "project");
  ModeCoords c;
  c.remainder = state;
  for (const auto& rho : spectrum.modes) {
    const double l = inner(rho, state.position);
    const double ld = inner(rho, state.velocity);
    c.lambda.push_back(l);
    c.lambda_dot.push_back(ld);
    c.remainder.position -= l * rho;
    c.remainder.velocity -= ld * rho;
  }
  return c;
}

State assemble(const Spectrum& spectrum, const ModeCoords& coords) {
  if (coords.lambda.size() != spectrum.size() || coords.lambda_dot.size() != spectrum.size())
    throw DimensionError("assemble: coefficient count does not match the spectrum");
  State s = coords.remainder;
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    s.position += coords.lambda[i] * spectrum.modes[i];
    s.velocity += coords.lambda_dot[i] * spectrum.modes[i];
  }
  return s;
}

std::pair<double, double> hyperbolic_coords(double lambda, double lambda_dot, double k) {
  if (!(k > 0.0)) throw ArgumentError("hyperbolic_coords: k must be positive");
  return {0.5 * (lambda + lambda_dot / k), 0.5 * (lambda - lambda_dot / k)};
}

std::pair<double, double> from_hyperbolic(double mu_plus, double mu_minus, double k) {
  if (!(k > 0.0)) throw ArgumentError("from_hyperbolic: k must be positive");
  return {mu_plus + mu_minus, k * (mu_plus - mu_minus)};
}

MeshkovFit meshkov_fit(const Field& f, double r_lo, double r_hi) {
  const auto& grid = f.grid();
  if (!(r_lo < r_hi)) throw ArgumentError("meshkov_fit: empty window");
  const auto v = f.rv();
  std::size_t j_lo = static_cast<std::size_t>(std::ceil(r_lo / grid.dr() - 1e-9));
  const std::size_t j_hi = std::min(grid.index_at_or_below(r_hi), v.size() - 1);

  std::size_t last_change = 0;
  int last_sign = 0;
  for (std::size_t j = 1; j < v.size(); ++j) {
    if (v[j] == 0.0) continue;
    const int s = v[j] > 0.0 ? 1 : -1;
    if (last_sign != 0 && s != last_sign) last_change = j;
    last_sign = s;
  }
  if (last_change > j_lo) j_lo = last_change + 1;
  if (j_hi < j_lo + 3) throw FitError("meshkov_fit: no sign-definite window left");

  std::vector<double> x, y;
  const double sign = v[j_lo] > 0.0 ? 1.0 : -1.0;
  for (std::size_t j = j_lo; j <= j_hi; ++j) {
    const double a = std::abs(v[j]);
    if (!(a > 1e-290) || !std::isfinite(a)) throw FitError("meshkov_fit: values underflow inside the window");
    x.push_back(grid.r(j));
    y.push_back(std::log(a));
  }
  const auto [intercept, slope] = fit_line(x, y);

  MeshkovFit fit;
  fit.k_hat = -slope;
  fit.c_hat = sign * std::exp(intercept);
  fit.r_lo = grid.r(j_lo);
  fit.r_hi = grid.r(j_hi);
  for (std::size_t j = j_lo; j <= j_hi; ++j) {
    const double dev = std::abs(v[j] * std::exp(fit.k_hat * grid.r(j)) - fit.c_hat) / std::abs(fit.c_hat);
    fit.remainder = std::max(fit.remainder, dev);
  }
  return fit;
}

MeshkovFit meshkov_fit(const Spectrum& spectrum, std::size_t i) {
  const double R = spectrum.grid.r_max();
  return meshkov_fit(spectrum, i, 0.25 * R, 0.75 * R);
}

MeshkovFit meshkov_fit(const Spectrum& spectrum, std::size_t i, double r_lo, double r_hi) {
  if (i >= spectrum.size()) throw ArgumentError("meshkov_fit: mode index out of range");
  auto fit = meshkov_fit(spectrum.modes[i], r_lo, r_hi);
  fit.mode = i;
  fit.rate_error = std::abs(fit.k_hat - spectrum.k[i]) / spectrum.k[i];
  return fit;
}

double eigen_residual(const LinearizedOperator& op, const Spectrum& spectrum, std::size_t i) {
  const auto v = spectrum.modes.at(i).rv();
  const std::size_t n = v.size() - 1;
  const double dr = op.grid.dr();
  const double inv = 1.0 / (dr * dr);
  const double lam = spectrum.eigenvalues[i];
  double s = 0.0;
  for (std::size_t j = 1; j < n; ++j) {
    const double r = (2.0 * v[j] - v[j + 1] - v[j - 1]) * inv + (op.W[j] - lam) * v[j];
    s += r * r;
  }
  return std::sqrt(kFourPi * dr * s);
}

}  // namespace wavelab
