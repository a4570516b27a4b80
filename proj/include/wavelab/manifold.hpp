#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "wavelab/evolution.hpp"
#include "wavelab/spectral.hpp"
#include "wavelab/steady_states.hpp"

namespace wavelab {

/// Center-stable data at time T: mode amplitudes lambda_i(T) and a remainder (gamma, gamma_t)
/// with no component along any eigenmode.
struct CsData {
  std::vector<double> lambdas;
  State remainder;
  double T = 0.0;
};

/// Projects the eigenmodes out of both components of `remainder`.
CsData make_cs(const Spectrum& spectrum, std::vector<double> lambdas, const State& remainder, double T = 0.0);
CsData zero_cs(const Spectrum& spectrum, double T = 0.0);
/// sum |lambda_i| + ||remainder||_{H1 x L2}.
double cs_size(const CsData& cs);
/// Largest |<rho_i, gamma>| or |<rho_i, gamma_t>|.
double cs_orthogonality(const Spectrum& spectrum, const CsData& cs);
CsData scaled(const CsData& cs, double s);

/// (phi + sum lambda_i rho_i + gamma, sum lambda_dot_i rho_i + gamma_t).
State cs_state(const Field& phi, const Spectrum& spectrum, const CsData& cs, const std::vector<double>& lambda_dots);

/// How the stability integral is discretized. `leapfrog` sums the nonlinearity samples with the
/// exact bounded-solution weights of the discrete mode recursion, so the fixed point is the
/// scheme's own stable manifold; `trapezoid` is the plain quadrature of the continuous formula.
enum class VelocityRule { leapfrog, trapezoid };

struct VelocityEstimate {
  std::vector<double> lambda_dot;
  std::vector<double> linear;
  std::vector<double> integral;
  /// e^{k (T - t_last)} sup|N_rho| / k, with the sup taken over the last tenth of the samples.
  std::vector<double> tail_bound;
};

/// lambda_dot_i(T) = -k_i lambda_i(T) - int_T^{t_cut} e^{k_i (T - s)} N_rho_i(s) ds from the
/// trajectory's nonlinearity samples. Samples past the end of the trajectory are treated as zero.
VelocityEstimate stability_velocity(const CsData& cs, const Trajectory& traj, const Spectrum& spectrum,
                                    double t_cut, VelocityRule rule = VelocityRule::leapfrog);

struct ShootConfig {
  double cfl = 0.25;
  /// 0 selects T + max(10 / k_min, 20).
  double t_cut = 0.0;
  double tol = 1e-10;
  int max_iter = 40;
  double damping = 0.5;
  int damped_iters = 3;
  /// Runs stop once some |lambda_i| passes departure_factor * data size, clamped to
  /// [departure_floor, departure_cap]. A run that leaves this band has left the local regime even
  /// if it later settles elsewhere; without the stop, any bounded excursion makes the truncated
  /// stability integral look converged (its residual carries a factor e^{-k (t_cut - T)}).
  double departure_factor = 2.0;
  double departure_floor = 1e-8;
  double departure_cap = 0.1;
  /// Data larger than this are rejected (stand-in for the contraction radius eps_0).
  double budget = 0.05;
  /// Snapshot stride for the X-norm diagnostic.
  int record_every = 20;
  VelocityRule rule = VelocityRule::leapfrog;
};

double default_t_cut(const Spectrum& spectrum, double T);

struct ShootResult {
  std::vector<double> lambda_dots;
  std::vector<std::vector<double>> history;
  std::vector<double> residuals;
  bool converged = false;
  int iterations = 0;
  /// sum_i max(sup_t |lambda_i|, ||lambda_i||_{L2_t}) + ||gamma||_{L^{6,2}_x L^inf_t}, over the window.
  double x_norm = 0.0;
  /// End of the stretch where every |lambda_i(t)| <= 2 cs_size; round-off in lambda_dot eventually
  /// excites the unstable direction, so a computed on-manifold solution is only followed this far.
  double window_end = 0.0;
  double t_cut = 0.0;
  Trajectory trajectory;
};

ShootResult lp_shoot(const CsData& cs, const Potential& potential, const SteadyState& steady,
                     const Spectrum& spectrum, const ShootConfig& cfg = {});

/// Evolves cs with the given velocities until some mode departs (or t_cut).
/// Returns +1 / -1 for the sign of the first mode past the departure level, 0 if none departs.
int departure_sign(const CsData& cs, const std::vector<double>& lambda_dots, const Potential& potential,
                   const SteadyState& steady, const Spectrum& spectrum, const ShootConfig& cfg);

struct BisectionResult {
  double threshold = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  int evaluations = 0;
};

/// Single unstable mode only. Bisects lambda_dot_1(T) between a value that departs upward and one
/// that departs downward. `half_width` 0 picks max(1e-6, k |lambda| + ||remainder||).
BisectionResult bisection_oracle(const CsData& cs, const Potential& potential, const SteadyState& steady,
                                 const Spectrum& spectrum, const ShootConfig& cfg = {}, double resolution = 1e-12,
                                 double half_width = 0.0);

struct GrowthReport {
  std::vector<double> times;
  /// Per mode.
  std::vector<double> initial_mu_plus;
  std::vector<std::vector<double>> mu_plus;
  std::vector<std::vector<double>> mu_minus;
  std::vector<double> remainder_norm;
  std::vector<double> fitted_rates;
  double K = 20.0;
  std::optional<double> t_dom;
  std::size_t dominant_mode = 0;
  /// ||R(T_dom)|| / ((1/K) e^{k T_dom} |mu+(0)| ||(rho, k rho)||); at most 1 when the shape bound holds.
  double remainder_bound_ratio = 0.0;
};

/// Nonlinear run from (phi, 0) + h0 over [0, T]. Requires e^{3 k_1 T} ||h0|| <= 0.1.
GrowthReport growth_experiment(const State& h0, const Potential& potential, const SteadyState& steady,
                               const Spectrum& spectrum, double T, double K = 20.0, double cfl = 0.25);

/// lambda_dot_1(T) over a grid of (lambda_1(T), remainder amplitude) with a fixed remainder shape.
struct ChartTable {
  std::vector<double> lambdas;
  std::vector<double> amplitudes;
  /// [i][j] for lambdas[i], amplitudes[j].
  std::vector<std::vector<double>> lambda_dot;
  std::vector<std::vector<bool>> converged;
  /// Central difference in lambda at amplitude 0 using the two samples nearest 0.
  double gradient_at_zero = 0.0;
  /// max |f(l, a) + f(-l, -a)| over sample pairs present in the table.
  double odd_defect = 0.0;
  /// max |f(i+1,j+1) - f(i+1,j) - f(i,j+1) + f(i,j)| compared between neighbouring cells,
  /// relative to the largest first difference; small for a C^1 chart on a fine table.
  double mixed_jump = 0.0;
};

ChartTable chart_sample(const std::vector<double>& lambdas, const std::vector<double>& amplitudes,
                        const State& remainder_shape, const Potential& potential, const SteadyState& steady,
                        const Spectrum& spectrum, const ShootConfig& cfg = {}, int workers = 1);

/// Largest scale s in [0, s_max] (to relative resolution `rel`) for which lp_shoot converges on s * cs.
double contraction_radius(const CsData& direction, const Potential& potential, const SteadyState& steady,
                          const Spectrum& spectrum, ShootConfig cfg, double s_max, double rel = 0.05);

struct DepartureRun {
  double delta = 0.0;
  /// First time ||u - phi||_{H1 x L2} reaches eps1; NaN if not reached.
  double exit_time = 0.0;
  double fitted_rate = 0.0;
};

/// Perturbs the converged velocities by delta in mode 0 and follows the departure.
std::vector<DepartureRun> off_manifold_departure(const CsData& cs, const ShootResult& base,
                                                 const std::vector<double>& deltas, double eps1,
                                                 const Potential& potential, const SteadyState& steady,
                                                 const Spectrum& spectrum, const ShootConfig& cfg = {});

/// Random remainder data: a few smooth bumps per component, parameters fixed by the seed alone so
/// the same draws can be sampled on different grids.
struct RemainderDraw {
  std::vector<double> pos_amp, vel_amp, center, width;
};

std::vector<RemainderDraw> remainder_draws(int count, std::uint64_t seed);

struct StrichartzEnsemble {
  /// ||gamma||_{L^{6,2}_x L^inf_t} / ||(gamma, gamma_t)(0)||_{H1 x L2}, per draw.
  std::vector<double> ratios;
  double max_ratio = 0.0;
  double mean_ratio = 0.0;
};

/// Linearized runs from each draw (modes projected out) over [0, t_end], with the mode components
/// removed frame by frame before the reversed norm is taken.
StrichartzEnsemble reversed_strichartz_ensemble(const std::vector<RemainderDraw>& draws, const Potential& potential,
                                                const SteadyState& steady, const Spectrum& spectrum,
                                                double t_end = 10.0, int workers = 1);

}  // namespace wavelab
