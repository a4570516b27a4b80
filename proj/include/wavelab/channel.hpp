#pragma once

#include <string>
#include <vector>

#include "wavelab/evolution.hpp"
#include "wavelab/manifold.hpp"
#include "wavelab/spectral.hpp"
#include "wavelab/steady_states.hpp"

namespace wavelab {

enum class ExteriorKind { dt_only, full };

struct ExteriorSeries {
  std::vector<double> times;
  std::vector<double> values;
  /// Set when the cone left the grid; the series stops at the last sample that fit.
  bool truncated = false;
};

/// At every snapshot, 4 pi int_{r >= |t - apex| + R} of u_t^2 (dt_only) or (u_r^2 + u_t^2)/2 (full)
/// times r^2 dr, for u minus the trajectory's base profile. With `perturbation` false the base is
/// not subtracted. Negative R is allowed; the lower limit is clipped at 0.
ExteriorSeries exterior_energy(const Trajectory& traj, double R, double apex, ExteriorKind kind,
                               bool perturbation = true);

/// 4 pi int_{r >= a} (f_r^2)/2 r^2 dr for a static profile.
double static_exterior_energy(const Field& f, double a);

struct ChannelReport {
  double R = 0.0;
  std::vector<double> mu_plus;
  std::vector<double> mu_minus;
  ExteriorSeries series;
  double inf = 0.0;
  double inf_time = 0.0;
  /// inf over the first window divided by the growing-direction mass sum |mu|^2.
  double ratio = 0.0;
  /// Same ratio over the doubled window.
  double ratio_doubled = 0.0;
  /// Mean and relative spread (max - min) / mean over samples with t + R >= tail_radius.
  double tail_mean = 0.0;
  double tail_spread = 0.0;
  /// 2 pi k c^2 mu^2 e^{-2 k R} from the Meshkov fit of the dominant mode.
  double closed_form = 0.0;
  bool pass = false;
  std::string note;
};

struct ChannelConfig {
  double t_window = 4.0;
  double tail_radius = 10.0;
  double cfl = 0.5;
  int record_every = 10;
  /// Run toward negative times; the growing direction is then mu-.
  bool backward = false;
};

/// Linearized run from sum mu+_i (rho_i, k_i rho_i) + mu-_i (rho_i, -k_i rho_i) + remainder,
/// dt-only exterior energy outside r = |t| + R. PASS when the ratio is positive and does not
/// fall below half its value when the window is doubled.
ChannelReport channel_verify_linear(const Potential& potential, const SteadyState& steady, const Spectrum& spectrum,
                                    const std::vector<double>& mu_plus, const std::vector<double>& mu_minus,
                                    const State& remainder, double R, const ChannelConfig& cfg = {});

struct NonlinearChannelReport {
  ChannelReport nonlinear;
  ExteriorSeries linear_series;
  /// max |E_nl - E_lin| / E_lin over t <= 2 / k of the dominant mode.
  double early_deviation = 0.0;
  /// c(R) |mu|^2 with c(R) half the linear ratio.
  double required = 0.0;
  std::size_t dominant_mode = 0;
};

/// Nonlinear run from (phi, 0) + h0 with the same diagnostics, compared against the linearized run
/// from the same data. Rejects ||h0|| above `budget` and data whose dominant growing coordinate
/// is not K times everything else.
NonlinearChannelReport channel_verify_nonlinear(const State& h0, const Potential& potential, const SteadyState& steady,
                                                const Spectrum& spectrum, double R, const ChannelConfig& cfg = {},
                                                double K = 20.0, double budget = 0.05);

struct ExpansionReport {
  std::vector<double> betas;
  std::vector<double> D;
  /// D(beta_i) / D(beta_{i+1}); 8 for a cubic remainder.
  std::vector<double> ratios;
  /// The sum_{j>=3} C(6,j) phi^{6-j} (beta Lambda_0)^j / 6 term computed directly, per beta.
  std::vector<double> direct;
  /// 1/2 <L rho_i, rho_i> for each mode (should be -k_i^2 / 2).
  std::vector<double> quadratic;
  /// Coefficient of mu+ mu- per mode (should be -2 k_i^2).
  std::vector<double> cross;
};

ExpansionReport energy_expansion_check(const SteadyState& steady, const Potential& potential, const Spectrum& spectrum,
                                       const State& perturbation, double beta0, double cross_beta = 1e-3);

struct OnePassConfig {
  /// Exit level for ||u - phi||_{H1 x L2}.
  double eps1 = 1e-2;
  /// Run length after T.
  double t_run = 70.0;
  int record_every = 40;
  ScatterOptions scatter;
};

struct OnePassRun {
  double delta = 0.0;
  bool exited = false;
  double exit_time = 0.0;
  double apex = 0.0;
  ExteriorSeries series;
  double late_inf = 0.0;
  bool stabilized = false;
  double surplus = 0.0;
  ScatterVerdict scatter;
  std::string verdict;
};

struct OnePassReport {
  /// E(U) - E(phi, 0) for the on-manifold base.
  double base_radiation = 0.0;
  std::vector<OnePassRun> runs;
  /// (max - min) / mean of the positive surpluses.
  double surplus_spread = 0.0;
};

OnePassReport one_pass_experiment(const CsData& cs, const ShootResult& base, const std::vector<double>& deltas,
                                  const Potential& potential, const SteadyState& steady, const Spectrum& spectrum,
                                  const std::vector<SteadyState>& steadies, const ShootConfig& shoot_cfg = {},
                                  const OnePassConfig& cfg = {});

}  // namespace wavelab
