#pragma once

#include <string>
#include <utility>
#include <vector>

#include "wavelab/radial_core.hpp"
#include "wavelab/steady_states.hpp"

namespace wavelab {

/// L = -Lap - V + 5 phi^4 acting on v = r u, Dirichlet at r = 0 and r = r_max.
/// Stored as the symmetric tridiagonal matrix on interior nodes 1..n-1:
/// diagonal 2/dr^2 + W_j, off-diagonal -1/dr^2, with W = -V + 5 phi^4.
struct LinearizedOperator {
  RadialGrid grid;
  Field W;

  std::vector<double> diagonal() const;
  double off_diagonal() const { return -1.0 / (grid.dr() * grid.dr()); }
  /// (L u) as a field; the origin value is extrapolated.
  Field apply(const Field& u) const;
  /// Same operator restricted to [0, r_max / 2] with the same spacing.
  LinearizedOperator half_domain() const;
};

LinearizedOperator linearize(const Potential& potential, const Field& phi);
LinearizedOperator linearize(const Potential& potential, const SteadyState& steady);

struct Spectrum {
  RadialGrid grid;
  /// -k_i^2, ascending.
  std::vector<double> eigenvalues;
  std::vector<double> k;
  /// Orthonormal in L^2(R^3); positive at the first interior node.
  std::vector<Field> modes;
  /// Eigenvalues in [-gap, 0]: hyperbolicity failures, excluded from the modes.
  std::vector<double> near_zero;
  double gap = 0.0;

  std::size_t size() const { return modes.size(); }
};

/// 10 (pi / r_max)^2, the scale of eigenvalues created by the Dirichlet box.
double default_gap(const RadialGrid& grid);

Spectrum negative_spectrum(const LinearizedOperator& op);
Spectrum negative_spectrum(const LinearizedOperator& op, double gap);

/// Smallest r_max with exp(-k r_max) below `level` for the slowest mode.
double suggested_r_max(const Spectrum& spectrum, double level = 1e-10);

struct HyperbolicityReport {
  bool gap_ok = true;
  /// min |eigenvalue| / gap over the computed negative spectrum (infinity when empty).
  double gap_margin = 0.0;
  bool no_resonance = true;
  /// |B| r_max / (|A| + |B| r_max) for the zero-energy solution r psi ~ A + B r.
  double resonance_margin = 0.0;
  double fit_A = 0.0;
  double fit_B = 0.0;
  bool stable_under_resize = true;
  /// max relative eigenvalue change between r_max / 2 and r_max.
  double resize_change = 0.0;
  bool pass = true;
  std::string note;
};

HyperbolicityReport hyperbolicity_check(const LinearizedOperator& op, const Spectrum& spectrum,
                                        double resonance_threshold = 0.05);

/// Regular zero-energy solution of L psi = 0, returned as r psi, normalized by its value at r = dr.
std::vector<double> zero_energy_solution(const LinearizedOperator& op);

struct ModeCoords {
  std::vector<double> lambda;
  std::vector<double> lambda_dot;
  State remainder;
};

ModeCoords project(const Spectrum& spectrum, const State& state);
State assemble(const Spectrum& spectrum, const ModeCoords& coords);

/// (mu+, mu-) = ((lambda + lambda_dot / k) / 2, (lambda - lambda_dot / k) / 2).
std::pair<double, double> hyperbolic_coords(double lambda, double lambda_dot, double k);
/// Inverse: (lambda, lambda_dot) = (mu+ + mu-, k (mu+ - mu-)).
std::pair<double, double> from_hyperbolic(double mu_plus, double mu_minus, double k);

struct MeshkovFit {
  std::size_t mode = 0;
  double k_hat = 0.0;
  double c_hat = 0.0;
  double r_lo = 0.0;
  double r_hi = 0.0;
  /// max |r rho e^{k_hat r} - c_hat| / |c_hat| over the window.
  double remainder = 0.0;
  /// |k_hat - k| / k when the eigenvalue is known.
  double rate_error = 0.0;
};

/// Log-linear fit of r f(r) ~ c e^{-k r} on [r_lo, r_hi]. The window is moved past the last
/// sign change when needed; FitError if nothing usable remains or values underflow.
MeshkovFit meshkov_fit(const Field& f, double r_lo, double r_hi);
MeshkovFit meshkov_fit(const Spectrum& spectrum, std::size_t i);
MeshkovFit meshkov_fit(const Spectrum& spectrum, std::size_t i, double r_lo, double r_hi);

/// || L rho_i + k_i^2 rho_i ||_{L^2}.
double eigen_residual(const LinearizedOperator& op, const Spectrum& spectrum, std::size_t i);

}  // namespace wavelab
