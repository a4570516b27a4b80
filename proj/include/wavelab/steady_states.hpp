#pragma once

#include <vector>

#include "wavelab/radial_core.hpp"

namespace wavelab {

enum class EndBehavior { decays, diverges_up, diverges_down };

const char* to_string(EndBehavior b);

/// Solution of the radial steady-state ODE started from phi(0) = a, phi'(0) = 0.
struct ShootProfile {
  double a = 0.0;
  Field profile;
  EndBehavior behavior = EndBehavior::decays;
  int nodes = 0;
  /// Radius where integration stopped (guard hit or end of the shooting interval).
  double r_stop = 0.0;
};

struct ShootOptions {
  /// Outer end of the shooting interval; 0 means min(r_max, 40).
  double r_end = 0.0;
  /// |r phi| above this counts as divergence.
  double guard = 100.0;
  double abs_tol = 1e-13;
  double rel_tol = 1e-11;
};

ShootProfile shoot(const Potential& potential, double a, const ShootOptions& opt = {});

struct SteadyState {
  Field profile;
  double a = 0.0;
  int nodes = 0;
  double energy = 0.0;
  /// Least-squares constant fit of r phi on [r_max/2, r_max].
  double tail_coeff = 0.0;
  /// max |r phi - tail_coeff| over the same window.
  double tail_spread = 0.0;
  double residual = 0.0;
  int newton_iterations = 0;
  bool converged = true;
};

/// sqrt(4 pi int |-Lap phi - V phi + phi^5|^2 r^2 dr) over interior nodes.
double residual(const Field& phi, const Potential& potential);
double residual(const SteadyState& state, const Potential& potential);

struct SteadyOptions {
  double a_lo = 0.0;
  double a_hi = 5.0;
  double a_step = 0.01;
  int max_nodes = 3;
  double bisect_tol = 1e-12;
  double residual_tol = 1e-8;
  int newton_max_iter = 60;
  ShootOptions shoot;
};

/// Damped Newton on the discrete boundary-value problem, starting from `guess`.
SteadyState polish(const Field& guess, const Potential& potential, double a, const SteadyOptions& opt = {});

/// Steady states found by scanning phi(0) in [a_lo, a_hi], bisecting each change of end
/// behavior, and polishing. Always contains phi = 0, and -phi for every phi. Sorted by energy.
std::vector<SteadyState> find_steady_states(const Potential& potential, const SteadyOptions& opt = {});

/// Number of sign changes of the profile, ignoring samples below 1e-10 of the max.
int count_nodes(const Field& f);

}  // namespace wavelab
