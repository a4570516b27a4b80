#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wavelab/radial_core.hpp"
#include "wavelab/spectral.hpp"
#include "wavelab/steady_states.hpp"

namespace wavelab {

enum class FlowKind { nonlinear, linearized, free, truncated_nonlinear, truncated_linear };

const char* to_string(FlowKind kind);
FlowKind parse_flow_kind(const std::string& name);

/// Dt-only (or full) energy outside the cone r >= |t - apex| + R, sampled every step.
struct ExteriorProbe {
  double R = 0.0;
  double apex = 0.0;
  bool full = false;
};

struct EvolveConfig {
  /// dt = cfl * dr unless dt > 0 is given.
  double cfl = 0.5;
  double dt = 0.0;
  /// Final time; t_end < t0 runs backward. The step is shrunk slightly to land on t_end.
  double t_end = 20.0;
  /// Time label of the initial state.
  double t0 = 0.0;
  FlowKind kind = FlowKind::nonlinear;
  /// Truncated flows drop V and phi inside |x| < |t - apex|.
  double apex = 0.0;
  /// Width of a smooth cutoff for truncated flows; 0 keeps the sharp per-node cutoff.
  double smooth_width = 0.0;
  /// Snapshot stride in steps; 0 records only the first and last level.
  int record_every = 0;
  /// Scalar series stride in steps.
  int series_every = 1;
  /// max |r u - r phi| beyond this flags numerical blowup.
  double overflow_guard = 1e8;
  /// Energy series cost a few passes over the grid per sample; shooting runs skip them.
  bool track_energy = true;
  /// Stop once any |lambda_i| exceeds this (0 disables).
  double stop_lambda = 0.0;
  /// Stop once the H1 x L2 norm of u - phi exceeds this (0 disables).
  double stop_norm = 0.0;
  /// Reject runs whose perturbation support plus duration exceeds r_max.
  bool enforce_causal = true;
  std::vector<ExteriorProbe> probes;
};

enum class RunStatus { completed, stopped, blowup_flagged };

const char* to_string(RunStatus status);

struct Trajectory {
  EvolveConfig config;
  double dt = 0.0;
  RunStatus status = RunStatus::completed;
  /// Base profile phi (zero when none was supplied).
  Field base;
  SpaceTimeField u;
  SpaceTimeField ut;

  std::vector<double> times;
  /// Empty when track_energy is off.
  /// Energy of u (nonlinear flows) or the conserved quadratic energy of u - phi (linear flows).
  std::vector<double> energy;
  /// energy plus the O(dt^2) modified-Hamiltonian correction of the leapfrog scheme.
  std::vector<double> shadow_energy;
  /// H1 x L2 norm of u - phi.
  std::vector<double> h_norm;
  /// Per mode: <rho_i, u - phi>, <rho_i, u_t>, and <rho_i, N> with N = -[(phi+h)^5 - phi^5 - 5 phi^4 h].
  std::vector<std::vector<double>> lambda;
  std::vector<std::vector<double>> lambda_dot;
  std::vector<std::vector<double>> n_rho;
  /// Per probe; NaN once the cone leaves the grid.
  std::vector<std::vector<double>> exterior;

  State final_state() const { return State(u.frames.back(), ut.frames.back()); }
};

/// Leapfrog on h = r (u - phi) with the second-order Taylor start. Keeps three time levels
/// so the centered velocity of the current level is always available.
class Stepper {
 public:
  Stepper(const State& initial, const Potential& potential, const Field* phi, FlowKind kind, double dt,
          double t0 = 0.0, double apex = 0.0, double smooth_width = 0.0);

  void step();
  /// Swap the outer time levels and flip the sign of dt: subsequent steps retrace the run.
  void reverse();

  double time() const { return t_; }
  double dt() const { return dt_; }
  const std::vector<double>& h() const { return cur_; }
  /// (h^{m+1} - h^{m-1}) / (2 dt).
  std::vector<double> h_velocity() const;
  State state() const;
  const std::vector<double>& acceleration() const { return acc_; }

  /// Energy of the current level (see Trajectory::energy) and its modified-Hamiltonian correction.
  double energy() const;
  double shadow_correction() const;
  /// <rho, N> for a mode given as r rho.
  double n_rho(const std::vector<double>& rv_mode) const;
  double h_norm() const;
  double max_abs_h() const;

 private:
  void accelerate(const std::vector<double>& h, double t, std::vector<double>& out) const;
  double cutoff(std::size_t j, double t) const;
  void advance_next();

  RadialGrid grid_;
  std::vector<double> V_;
  std::vector<double> phi_;
  bool has_phi_;
  FlowKind kind_;
  double dt_, t_, apex_, smooth_;
  double boundary_;
  std::vector<double> prev_, cur_, next_, acc_;
};

Trajectory evolve(const State& initial, const Potential& potential, const SteadyState* steady,
                  const Spectrum* spectrum, const EvolveConfig& cfg);

/// Largest radius where the perturbation (relative to phi) exceeds 1e-10 of its maximum.
double perturbation_support(const State& initial, const Field* phi);

enum class ScatterKind { scatter_to, departed, undecided };

struct ScatterVerdict {
  ScatterKind kind = ScatterKind::undecided;
  /// Index into the steady-state list for scatter_to, or nearest state otherwise.
  std::size_t index = 0;
  std::vector<double> final_core_distance;
  double free_mismatch = 0.0;
  std::string detail;
};

struct ScatterOptions {
  double r_core = 10.0;
  double threshold = 1e-2;
  double departure = 0.1;
  double comparison_tol = 0.1;
};

std::string to_string(const ScatterVerdict& v);

ScatterVerdict scatter_diagnose(const Trajectory& traj, const std::vector<SteadyState>& steadies,
                                const ScatterOptions& opt = {});

/// ||(u - phi, u_t)||_{H1 x L2(r <= r_core)}.
double core_distance(const State& s, const Field& phi, double r_core);

}  // namespace wavelab
