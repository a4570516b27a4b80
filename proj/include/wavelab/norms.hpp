#pragma once

#include <limits>
#include <span>
#include <vector>

#include "wavelab/radial_core.hpp"

namespace wavelab {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Trapezoid weights 4 pi r_j^2 dr (halved at both ends) for the 3D radial measure.
std::vector<double> volume_weights(const RadialGrid& grid);

/// <f, g> in L^2(R^3) restricted to radial functions.
double inner(const Field& f, const Field& g);
double l2_norm(const Field& f);
/// ||f||_{L^p(R^3)}; p = infinity gives the sup over nodes.
double lp_norm(const Field& f, double p);

/// Integral over [a, b] (clipped to the grid) of the piecewise-linear interpolant of nodal values g.
double shell_integral(std::span<const double> g, const RadialGrid& grid, double a, double b);

/// Energy E(u, u_t) = 4 pi int [u_r^2/2 + u_t^2/2 - V u^2/2 + u^6/6] r^2 dr.
///
/// The gradient term is evaluated in the v = r u form,
///   int u_r^2 r^2 dr = int v_r^2 dr - v(R)^2 / R,
/// with forward differences of v, so that the discrete energy's critical points are exactly
/// the discrete steady states and its Hessian is the discrete linearized operator. All other
/// terms use the trapezoid rule.
double energy(const State& state, const Potential& potential);

/// (4 pi int_{r_lo}^{r_hi} [u_r^2 + u_t^2] r^2 dr)^{1/2}, centered differences for u_r,
/// one-sided at the ends, partial cells at r_lo / r_hi interpolated linearly.
double energy_norm(const State& state, double r_lo, double r_hi);
/// Full-range energy norm.
double energy_norm(const State& state);

/// Lorentz quasi-norm p^{1/q} || lambda mu{|f| >= lambda}^{1/p} ||_{L^q(d lambda / lambda)}.
///
/// Samples are piecewise constant on cells [r_j - dr/2, r_j + dr/2) clipped to [0, r_max];
/// the layer-cake integral is then exact. q = infinity takes the sup over lambda; p = q =
/// infinity is the sup norm.
double lorentz_norm(const Field& f, double p, double q);

/// L^{p,q}_x L^{r_t}_t: temporal norm at every radius first, then lorentz_norm in x.
/// r_t = infinity takes the sup in time; finite r_t uses trapezoid quadrature over the samples.
double reversed_norm(const SpaceTimeField& field, double p, double q, double r_t);

/// L^5_t L^10_x with the 3D radial measure.
double strichartz_norm(const SpaceTimeField& field);

}  // namespace wavelab
