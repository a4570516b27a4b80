#include "wavelab/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "wavelab/errors.hpp"
#include "wavelab/norms.hpp"

namespace wavelab {
namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

bool is_truncated(FlowKind k) { return k == FlowKind::truncated_nonlinear || k == FlowKind::truncated_linear; }
bool is_nonlinear(FlowKind k) { return k == FlowKind::nonlinear || k == FlowKind::truncated_nonlinear; }

// Integral of the linear interpolant of g over [a, r_max].
double tail_integral(const std::vector<double>& g, const RadialGrid& grid, double a) {
  if (a >= grid.r_max()) return std::numeric_limits<double>::quiet_NaN();
  return shell_integral(g, grid, a, grid.r_max());
}

}  // namespace

const char* to_string(FlowKind kind) {
  switch (kind) {
    case FlowKind::nonlinear: return "nonlinear";
    case FlowKind::linearized: return "linearized";
    case FlowKind::free: return "free";
    case FlowKind::truncated_nonlinear: return "truncated-nonlinear";
    case FlowKind::truncated_linear: return "truncated-linear";
  }
  return "?";
}

FlowKind parse_flow_kind(const std::string& name) {
  for (auto k : {FlowKind::nonlinear, FlowKind::linearized, FlowKind::free, FlowKind::truncated_nonlinear,
                 FlowKind::truncated_linear})
    if (name == to_string(k)) return k;
  throw ArgumentError("unknown flow kind '" + name + "'");
}

const char* to_string(RunStatus status) {
  switch (status) {
    case RunStatus::completed: return "completed";
    case RunStatus::stopped: return "stopped";
    case RunStatus::blowup_flagged: return "blowup-flagged";
  }
  return "?";
}

Stepper::Stepper(const State& initial, const Potential& potential, const Field* phi, FlowKind kind, double dt,
                 double t0, double apex, double smooth_width)
    : grid_(initial.grid()),
      V_(grid_.size(), 0.0),
      phi_(grid_.size(), 0.0),
      has_phi_(phi != nullptr),
      kind_(kind),
      dt_(dt),
      t_(t0),
      apex_(apex),
      smooth_(smooth_width) {
  require_same_grid(grid_, potential.grid(), "Stepper");
  require_same_grid(grid_, initial.velocity.grid(), "Stepper");
  if (phi) require_same_grid(grid_, phi->grid(), "Stepper");
  if (!(dt != 0.0) || !std::isfinite(dt)) throw ArgumentError("Stepper: dt must be finite and nonzero");
  if (kind != FlowKind::free)
    for (std::size_t j = 0; j < V_.size(); ++j) V_[j] = potential[j];
  if (phi)
    for (std::size_t j = 0; j < phi_.size(); ++j) phi_[j] = (*phi)[j];

  const std::size_t n = grid_.size() - 1;
  Field h0 = initial.position;
  if (phi) h0 -= *phi;
  cur_ = h0.rv();
  cur_[0] = 0.0;
  boundary_ = cur_[n];
  const auto p0 = initial.velocity.rv();

  acc_.assign(n + 1, 0.0);
  accelerate(cur_, t_, acc_);
  next_.assign(n + 1, 0.0);
  prev_.assign(n + 1, 0.0);
  for (std::size_t j = 1; j < n; ++j) {
    next_[j] = cur_[j] + dt_ * p0[j] + 0.5 * dt_ * dt_ * acc_[j];
    prev_[j] = cur_[j] - dt_ * p0[j] + 0.5 * dt_ * dt_ * acc_[j];
  }
  next_[n] = prev_[n] = boundary_;
}

double Stepper::cutoff(std::size_t j, double t) const {
  if (!is_truncated(kind_)) return 1.0;
  const double cone = std::abs(t - apex_);
  const double r = grid_.r(j);
  if (smooth_ <= 0.0) return r >= cone ? 1.0 : 0.0;
  const double x = std::clamp((r - cone) / smooth_ + 0.5, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

void Stepper::accelerate(const std::vector<double>& h, double t, std::vector<double>& out) const {
  const std::size_t n = h.size() - 1;
  const double inv = 1.0 / (grid_.dr() * grid_.dr());
  const bool nonlinear = is_nonlinear(kind_);
  const bool linear_term = has_phi_ && kind_ != FlowKind::free;
  for (std::size_t j = 1; j < n; ++j) {
    const double chi = cutoff(j, t);
    const double r = grid_.r(j);
    const double eta = h[j] / r;
    const double f = linear_term ? phi_[j] * chi : 0.0;
    const double f2 = f * f;
    double g = 0.0;
    if (nonlinear) {
      const double e2 = eta * eta;
      g = eta * (5.0 * f2 * f2 + 10.0 * f2 * f * eta + 10.0 * f2 * e2 + 5.0 * f * e2 * eta + e2 * e2);
    } else if (linear_term) {
      g = 5.0 * f2 * f2 * eta;
    }
    out[j] = (h[j + 1] - 2.0 * h[j] + h[j - 1]) * inv + V_[j] * chi * h[j] - r * g;
  }
  out[0] = 0.0;
  out[n] = 0.0;
}

void Stepper::advance_next() {
  const std::size_t n = cur_.size() - 1;
  const double dt2 = dt_ * dt_;
  for (std::size_t j = 1; j < n; ++j) next_[j] = 2.0 * cur_[j] - prev_[j] + dt2 * acc_[j];
  next_[0] = 0.0;
  next_[n] = boundary_;
}

void Stepper::step() {
  std::swap(prev_, cur_);
  std::swap(cur_, next_);
  t_ += dt_;
  accelerate(cur_, t_, acc_);
  advance_next();
}

void Stepper::reverse() {
  std::swap(prev_, next_);
  dt_ = -dt_;
}

std::vector<double> Stepper::h_velocity() const {
  std::vector<double> p(cur_.size());
  for (std::size_t j = 0; j < p.size(); ++j) p[j] = (next_[j] - prev_[j]) / (2.0 * dt_);
  return p;
}

State Stepper::state() const {
  Field u = Field::from_rv(grid_, cur_);
  if (has_phi_) u += Field(grid_, phi_);
  return State(std::move(u), Field::from_rv(grid_, h_velocity()));
}

double Stepper::energy() const {
  const std::size_t n = cur_.size() - 1;
  const double dr = grid_.dr();
  const auto p = h_velocity();
  const bool full = kind_ == FlowKind::nonlinear;

  std::vector<double> v(cur_);
  if (full && has_phi_)
    for (std::size_t j = 0; j <= n; ++j) v[j] += grid_.r(j) * phi_[j];

  double grad = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double d = v[j + 1] - v[j];
    grad += d * d;
  }
  grad = grad / (2.0 * dr) - v[n] * v[n] / (2.0 * grid_.r(n));

  double rest = 0.0;
  for (std::size_t j = 1; j <= n; ++j) {
    const double c = j == n ? 0.5 * dr : dr;
    const double r = grid_.r(j);
    const double chi = cutoff(j, t_);
    const double e = v[j] / r;
    double density = 0.5 * p[j] * p[j] - 0.5 * V_[j] * chi * v[j] * v[j];
    if (full) {
      const double e2 = e * e;
      density += r * r * e2 * e2 * e2 / 6.0;
    } else if (kind_ == FlowKind::truncated_nonlinear) {
      const double f = has_phi_ ? phi_[j] * chi : 0.0;
      const double f2 = f * f, e2 = e * e;
      density += r * r * e2 * (15.0 * f2 * f2 + 20.0 * f2 * f * e + 15.0 * f2 * e2 + 6.0 * f * e2 * e + e2 * e2) / 6.0;
    } else if (kind_ != FlowKind::free && has_phi_) {
      const double f = phi_[j] * chi;
      density += 2.5 * f * f * f * f * v[j] * v[j];
    }
    rest += c * density;
  }
  return kFourPi * (grad + rest);
}

double Stepper::shadow_correction() const {
  const std::size_t n = cur_.size() - 1;
  const double dr = grid_.dr();
  const double inv = 1.0 / (dr * dr);
  const auto p = h_velocity();
  const bool nonlinear = is_nonlinear(kind_);
  const bool linear_term = has_phi_ && kind_ != FlowKind::free;
  double pkp = 0.0, aa = 0.0;
  for (std::size_t j = 1; j < n; ++j) {
    const double chi = cutoff(j, t_);
    const double f = linear_term ? phi_[j] * chi : 0.0;
    double stiff = 0.0;
    if (nonlinear) {
      const double s = f + cur_[j] / grid_.r(j);
      stiff = 5.0 * s * s * s * s;
    } else {
      stiff = 5.0 * f * f * f * f;
    }
    const double kp = (2.0 * p[j] - p[j + 1] - p[j - 1]) * inv - V_[j] * chi * p[j] + stiff * p[j];
    pkp += p[j] * kp;
    aa += acc_[j] * acc_[j];
  }
  return kFourPi * dr * dt_ * dt_ * (pkp / 12.0 - aa / 24.0);
}

double Stepper::n_rho(const std::vector<double>& rv_mode) const {
  if (!is_nonlinear(kind_)) return 0.0;
  const std::size_t n = cur_.size() - 1;
  double s = 0.0;
  for (std::size_t j = 1; j < n; ++j) {
    const double r = grid_.r(j);
    const double f = has_phi_ ? phi_[j] * cutoff(j, t_) : 0.0;
    const double e = cur_[j] / r;
    const double f2 = f * f, e2 = e * e;
    const double N = -e2 * (10.0 * f2 * f + 10.0 * f2 * e + 5.0 * f * e2 + e2 * e);
    s += rv_mode[j] * r * N;
  }
  return kFourPi * grid_.dr() * s;
}

double Stepper::h_norm() const {
  const std::size_t n = cur_.size() - 1;
  const double dr = grid_.dr();
  const auto p = h_velocity();
  double grad = 0.0, kin = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double d = cur_[j + 1] - cur_[j];
    grad += d * d;
  }
  grad = grad / dr - cur_[n] * cur_[n] / grid_.r(n);
  for (std::size_t j = 1; j <= n; ++j) kin += (j == n ? 0.5 : 1.0) * dr * p[j] * p[j];
  return std::sqrt(std::max(0.0, kFourPi * (grad + kin)));
}

double Stepper::max_abs_h() const {
  double m = 0.0;
  for (double x : cur_) {
    if (!std::isfinite(x)) return std::numeric_limits<double>::infinity();
    m = std::max(m, std::abs(x));
  }
  return m;
}

double perturbation_support(const State& initial, const Field* phi) {
  Field h = initial.position;
  if (phi) h -= *phi;
  const auto& grid = h.grid();
  const double scale = std::max(h.max_abs(), initial.velocity.max_abs());
  if (scale == 0.0) return 0.0;
  for (std::size_t j = grid.size(); j-- > 0;) {
    if (std::abs(h[j]) > 1e-10 * scale || std::abs(initial.velocity[j]) > 1e-10 * scale) return grid.r(j);
  }
  return 0.0;
}

Trajectory evolve(const State& initial, const Potential& potential, const SteadyState* steady,
                  const Spectrum* spectrum, const EvolveConfig& cfg) {
  const auto& grid = initial.grid();
  require_same_grid(grid, potential.grid(), "evolve");
  const double duration = std::abs(cfg.t_end - cfg.t0);
  if (!(duration > 0.0)) throw ArgumentError("evolve: t_end must differ from t0");
  const double nominal = cfg.dt > 0.0 ? cfg.dt : cfg.cfl * grid.dr();
  if (!(nominal > 0.0) || nominal > 0.9 * grid.dr() * (1.0 + 1e-12))
    throw ArgumentError("evolve: CFL ratio dt/dr must lie in (0, 0.9]");
  const auto steps = static_cast<long>(std::ceil(duration / nominal - 1e-9));
  const double dt = (cfg.t_end > cfg.t0 ? 1.0 : -1.0) * duration / static_cast<double>(steps);

  const Field* phi = steady ? &steady->profile : nullptr;
  if (cfg.enforce_causal) {
    const double support = perturbation_support(initial, phi);
    if (support + duration > grid.r_max() * (1.0 + 1e-12))
      throw ArgumentError("evolve: data support plus run length exceeds r_max (outer boundary would be felt)");
  }

  Trajectory traj;
  traj.config = cfg;
  traj.dt = dt;
  traj.base = phi ? *phi : Field(grid);

  std::vector<std::vector<double>> modes;
  if (spectrum) {
    require_same_grid(grid, spectrum->grid, "evolve");
    for (const auto& m : spectrum->modes) modes.push_back(m.rv());
  }
  traj.lambda.resize(modes.size());
  traj.lambda_dot.resize(modes.size());
  traj.n_rho.resize(modes.size());
  traj.exterior.resize(cfg.probes.size());

  Stepper st(initial, potential, phi, cfg.kind, dt, cfg.t0, cfg.apex, cfg.smooth_width);
  const std::size_t n = grid.size() - 1;
  const double dr = grid.dr();

  auto weighted = [&](const std::vector<double>& mode, const std::vector<double>& x) {
    double s = 0.0;
    for (std::size_t j = 1; j <= n; ++j) s += (j == n ? 0.5 : 1.0) * mode[j] * x[j];
    return kFourPi * dr * s;
  };

  auto record_series = [&]() {
    traj.times.push_back(st.time());
    if (cfg.track_energy) {
      const double e = st.energy();
      traj.energy.push_back(e);
      traj.shadow_energy.push_back(e + st.shadow_correction());
    }
    traj.h_norm.push_back(st.h_norm());
    if (!modes.empty() || !cfg.probes.empty()) {
      const auto p = st.h_velocity();
      for (std::size_t i = 0; i < modes.size(); ++i) {
        traj.lambda[i].push_back(weighted(modes[i], st.h()));
        traj.lambda_dot[i].push_back(weighted(modes[i], p));
        traj.n_rho[i].push_back(st.n_rho(modes[i]));
      }
      for (std::size_t k = 0; k < cfg.probes.size(); ++k) {
        const auto& probe = cfg.probes[k];
        const double edge = std::abs(st.time() - probe.apex) + probe.R;
        double val;
        if (probe.full) {
          const auto s = st.state();
          State h(s.position - traj.base, s.velocity);
          val = edge >= grid.r_max() ? std::numeric_limits<double>::quiet_NaN()
                                     : 0.5 * std::pow(energy_norm(h, edge, grid.r_max()), 2);
        } else {
          std::vector<double> g(n + 1);
          for (std::size_t j = 0; j <= n; ++j) g[j] = kFourPi * p[j] * p[j];
          val = tail_integral(g, grid, edge);
        }
        traj.exterior[k].push_back(val);
      }
    }
  };
  auto record_frame = [&]() {
    auto s = st.state();
    traj.u.push_back(st.time(), std::move(s.position));
    traj.ut.push_back(st.time(), std::move(s.velocity));
  };

  record_series();
  record_frame();
  long m = 0;
  for (m = 1; m <= steps; ++m) {
    st.step();
    if (!(st.max_abs_h() <= cfg.overflow_guard)) {
      traj.status = RunStatus::blowup_flagged;
      break;
    }
    const bool last = m == steps;
    bool stop = false;
    for (const auto& mode : modes)
      if (cfg.stop_lambda > 0.0 && std::abs(weighted(mode, st.h())) > cfg.stop_lambda) stop = true;
    if (cfg.stop_norm > 0.0 && st.h_norm() > cfg.stop_norm) stop = true;
    if (last || stop || (cfg.series_every > 0 && m % cfg.series_every == 0)) record_series();
    if (last || stop || (cfg.record_every > 0 && m % cfg.record_every == 0)) record_frame();
    if (stop) {
      traj.status = RunStatus::stopped;
      break;
    }
  }
  return traj;
}

double core_distance(const State& s, const Field& phi, double r_core) {
  State h(s.position - phi, s.velocity);
  return energy_norm(h, 0.0, std::min(r_core, s.grid().r_max()));
}

std::string to_string(const ScatterVerdict& v) {
  switch (v.kind) {
    case ScatterKind::scatter_to: return "SCATTER_TO(" + std::to_string(v.index) + ")";
    case ScatterKind::departed: return "DEPARTED";
    case ScatterKind::undecided: return "UNDECIDED";
  }
  return "?";
}

ScatterVerdict scatter_diagnose(const Trajectory& traj, const std::vector<SteadyState>& steadies,
                                const ScatterOptions& opt) {
  ScatterVerdict out;
  const auto& frames = traj.u.frames;
  const std::size_t m = frames.size();
  if (m < 4 || steadies.empty()) {
    out.detail = "too few snapshots";
    return out;
  }
  const double span = std::abs(traj.u.times.back() - traj.u.times.front());
  if (span < 2.0 * opt.r_core) out.detail = "run shorter than 2 r_core; verdict provisional";

  const std::size_t q = (3 * m) / 4;
  const std::size_t checkpoints[4] = {q, q + (m - 1 - q) / 3, q + 2 * (m - 1 - q) / 3, m - 1};
  const auto state_at = [&](std::size_t k) { return State(frames[k], traj.ut.frames[k]); };

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < steadies.size(); ++i) {
    std::vector<double> d;
    for (std::size_t k : checkpoints) d.push_back(core_distance(state_at(k), steadies[i].profile, opt.r_core));
    out.final_core_distance.push_back(d.back());
    if (d.back() < best) {
      best = d.back();
      out.index = i;
    }
    bool decaying = d.back() <= opt.threshold;
    for (std::size_t c = 1; c < d.size(); ++c) decaying = decaying && d[c] <= d[c - 1] + 1e-3 * opt.threshold;
    if (!decaying || out.kind == ScatterKind::scatter_to) continue;

    // the exterior part of u - phi should be a free wave: launch one from frame q and compare
    const auto& phi = steadies[i].profile;
    State start(frames[q] - phi, traj.ut.frames[q]);
    EvolveConfig free_cfg;
    free_cfg.kind = FlowKind::free;
    free_cfg.cfl = std::min(0.5, std::abs(traj.dt) / phi.grid().dr());
    free_cfg.t0 = traj.u.times[q];
    free_cfg.t_end = traj.u.times.back();
    free_cfg.enforce_causal = false;
    double mismatch = 0.0;
    if (free_cfg.t_end != free_cfg.t0) {
      auto w = evolve(start, Potential::zero(phi.grid()), nullptr, nullptr, free_cfg);
      const double lag = std::abs(free_cfg.t_end - free_cfg.t0);
      const double lo = opt.r_core + lag;
      const double hi = phi.grid().r_max() - lag;
      if (lo < hi) {
        State resid(frames[m - 1] - phi, traj.ut.frames[m - 1]);
        const double scale = energy_norm(resid, lo, hi);
        const double diff = energy_norm(resid - w.final_state(), lo, hi);
        mismatch = scale > opt.threshold * 1e-3 ? diff / scale : 0.0;
      }
    }
    out.free_mismatch = mismatch;
    if (mismatch <= opt.comparison_tol) {
      out.kind = ScatterKind::scatter_to;
      out.index = i;
    }
  }
  if (out.kind == ScatterKind::scatter_to) return out;
  if (best > opt.departure) out.kind = ScatterKind::departed;
  return out;
}

}  // namespace wavelab
