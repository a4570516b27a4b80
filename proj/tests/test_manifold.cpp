#include "doctest.h"

#include <cmath>

#include "fixtures.hpp"
#include "wavelab/errors.hpp"
#include "wavelab/manifold.hpp"
#include "wavelab/norms.hpp"

using namespace wavelab;

namespace {

const auto& ex() { return fixtures::excited(); }
const SteadyState& phi1() { return ex().ref.excited(); }
const Potential& V() { return ex().ref.potential; }

State remainder_shape() {
  const auto& g = ex().ref.grid;
  auto bump = [](double r) {
    const double x = (r - 3.0) / 2.0;
    return std::abs(x) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - x * x)) : 0.0;
  };
  auto s = project(ex().spectrum, State(Field::from_function(g, bump), Field(g))).remainder;
  const double n = energy_norm(s);
  return State((1.0 / n) * s.position, (1.0 / n) * s.velocity);
}

CsData single(double lambda, double amp = 0.0) {
  const auto shape = remainder_shape();
  return make_cs(ex().spectrum, {lambda}, State(amp * shape.position, amp * shape.velocity));
}

const ShootResult& shoot_small() {
  static const ShootResult r = lp_shoot(single(1e-4), V(), phi1(), ex().spectrum);
  return r;
}

}  // namespace

TEST_CASE("center-stable data are orthogonal to the modes") {
  auto cs = single(1e-4, 1e-3);
  CHECK(cs_orthogonality(ex().spectrum, cs) <= 1e-10);
  CHECK(cs_size(cs) == doctest::Approx(1e-4 + 1e-3).epsilon(1e-6));
  CHECK_THROWS_AS(make_cs(ex().spectrum, {1.0, 2.0}, cs.remainder), DimensionError);
}

TEST_CASE("stability velocity without nonlinearity is the linear part") {
  // the linearized flow carries no nonlinear samples
  auto cs = single(1e-4);
  const double k = ex().k1();
  EvolveConfig c;
  c.kind = FlowKind::linearized;
  c.cfl = 0.25;
  c.t_end = 5.0;
  auto tr = evolve(cs_state(phi1().profile, ex().spectrum, cs, {-k * 1e-4}), V(), &phi1(), &ex().spectrum, c);
  auto trap = stability_velocity(cs, tr, ex().spectrum, 5.0, VelocityRule::trapezoid);
  CHECK(trap.lambda_dot[0] == doctest::Approx(-k * 1e-4).epsilon(1e-14));
  auto leap = stability_velocity(cs, tr, ex().spectrum, 5.0);
  const double dt = tr.dt;
  const double c2 = 1.0 + 0.5 * k * k * dt * dt;
  CHECK(leap.lambda_dot[0] == doctest::Approx(-std::sqrt(c2 * c2 - 1.0) / dt * 1e-4).epsilon(1e-14));
  CHECK_THROWS_AS(stability_velocity(cs, tr, ex().spectrum, -1.0), ArgumentError);
}

TEST_CASE("zero data sit at the zero fixed point") {
  auto r = lp_shoot(zero_cs(ex().spectrum), V(), phi1(), ex().spectrum);
  CHECK(r.converged);
  CHECK(r.lambda_dots[0] == 0.0);
  CHECK(r.trajectory.h_norm.back() == 0.0);
}

TEST_CASE("small single-mode data: shooting, linear prediction and the bisection oracle agree") {
  const auto& r = shoot_small();
  const double k = ex().k1();
  REQUIRE(r.converged);
  CHECK(std::abs(r.lambda_dots[0] + k * 1e-4) <= 1e-8);

  auto oracle = bisection_oracle(single(1e-4), V(), phi1(), ex().spectrum);
  CHECK(std::abs(oracle.threshold - r.lambda_dots[0]) <= 1e-8);

  // re-deriving the velocity from the final trajectory reproduces the fixed point
  auto again = stability_velocity(single(1e-4), r.trajectory, ex().spectrum, r.t_cut);
  CHECK(std::abs(again.lambda_dot[0] - r.lambda_dots[0]) <= ShootConfig{}.tol);

  // the computed solution stays small and decays over its window
  CHECK(r.window_end > 5.0 / k);
  const auto& lam = r.trajectory.lambda[0];
  double at_three = -1.0;
  for (std::size_t m = 0; m < lam.size(); ++m) {
    if (r.trajectory.times[m] >= r.window_end) break;
    CHECK(std::abs(lam[m]) <= 2.0 * 1e-4);
    if (at_three < 0.0 && r.trajectory.times[m] >= 3.0 / k) at_three = std::abs(lam[m]);
  }
  CHECK(at_three == doctest::Approx(1e-4 * std::exp(-3.0)).epsilon(0.05));
  CHECK(std::isfinite(r.x_norm));
}

TEST_CASE("nonlinear part of the velocity is quadratic in the data") {
  auto integral = [](double lambda) {
    auto r = lp_shoot(single(lambda), V(), phi1(), ex().spectrum);
    REQUIRE(r.converged);
    return stability_velocity(single(lambda), r.trajectory, ex().spectrum, r.t_cut).integral[0];
  };
  const double a = integral(1e-3), b = integral(5e-4);
  CHECK(a / b == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("remainder-only data give a purely quadratic response") {
  std::vector<double> v;
  ShootConfig cfg;
  cfg.tol = 1e-15;
  for (double amp : {2e-3, 1e-3, 5e-4}) {
    auto r = lp_shoot(single(0.0, amp), V(), phi1(), ex().spectrum, cfg);
    REQUIRE(r.converged);
    v.push_back(r.lambda_dots[0]);
  }
  CHECK(std::abs(v[0]) > 0.0);
  CHECK(v[0] / v[1] == doctest::Approx(4.0).epsilon(0.1));
  CHECK(v[1] / v[2] == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("off-manifold velocities depart exponentially") {
  const auto& r = shoot_small();
  const double k = ex().k1();
  auto runs = off_manifold_departure(single(1e-4), r, {1e-6, 1e-7}, 1e-2, V(), phi1(), ex().spectrum);
  for (const auto& run : runs) {
    REQUIRE(std::isfinite(run.exit_time));
    CHECK(std::abs(run.fitted_rate - k) / k <= 0.1);
  }
  const double spacing = runs[1].exit_time - runs[0].exit_time;
  CHECK(std::abs(spacing - std::log(10.0) / k) <= 0.1 * std::log(10.0) / k);
}

TEST_CASE("guards on data size") {
  CHECK_THROWS_AS(lp_shoot(single(0.5), V(), phi1(), ex().spectrum), ArgumentError);
  CHECK_THROWS_AS(bisection_oracle(single(20.0), V(), phi1(), ex().spectrum), BracketError);
  auto far = single(1e-4);
  far.T = 5.0;
  ShootConfig cfg;
  cfg.t_cut = 2.0;
  CHECK_THROWS_AS(lp_shoot(far, V(), phi1(), ex().spectrum, cfg), ArgumentError);
}

TEST_CASE("growth of unstable modes") {
  const auto& sp = ex().spectrum;
  const double k = ex().k1();
  const auto& rho = sp.modes[0];

  SUBCASE("pure growing mode") {
    auto rep = growth_experiment(State(1e-5 * rho, 1e-5 * k * rho), V(), phi1(), sp, 1.2);
    CHECK(std::abs(rep.fitted_rates[0] - k) / k <= 0.01);
    CHECK(rep.mu_plus[0].back() == doctest::Approx(1e-5 * std::exp(k * 1.2)).epsilon(1e-3));
    REQUIRE(rep.t_dom.has_value());
    CHECK(rep.remainder_bound_ratio <= 1.0);
  }
  SUBCASE("pure stable mode decays forward") {
    auto rep = growth_experiment(State(1e-5 * rho, -1e-5 * k * rho), V(), phi1(), sp, 1.2);
    CHECK(std::abs(rep.mu_minus[0].back()) < std::abs(rep.mu_minus[0].front()));
    CHECK_FALSE(rep.t_dom.has_value());
  }
  SUBCASE("two growing modes around the trivial state") {
    const auto& tv = fixtures::trivial();
    REQUIRE(tv.spectrum.size() == 2);
    State h0(Field(tv.spectrum.grid), Field(tv.spectrum.grid));
    for (std::size_t i = 0; i < 2; ++i) {
      h0.position += 1e-9 * tv.spectrum.modes[i];
      h0.velocity += 1e-9 * tv.spectrum.k[i] * tv.spectrum.modes[i];
    }
    auto rep = growth_experiment(h0, V(), ex().ref.zero(), tv.spectrum, 1.2);
    for (std::size_t i = 0; i < 2; ++i)
      CHECK(std::abs(rep.fitted_rates[i] - tv.spectrum.k[i]) / tv.spectrum.k[i] <= 0.01);
    REQUIRE(rep.t_dom.has_value());
    CHECK(rep.dominant_mode == 0);
    CHECK(*rep.t_dom > 0.5);
    CHECK(rep.remainder_bound_ratio <= 1.0);
  }
  SUBCASE("size precondition") {
    CHECK_THROWS_AS(growth_experiment(State(1e-2 * rho, 1e-2 * k * rho), V(), phi1(), sp, 3.0), ArgumentError);
  }
}

TEST_CASE("chart near zero") {
  const double e = 1e-4;
  auto tab = chart_sample({-e, 0.0, e}, {-e, 0.0, e}, remainder_shape(), V(), phi1(), ex().spectrum);
  for (const auto& row : tab.converged)
    for (bool ok : row) CHECK(ok);
  CHECK(tab.lambda_dot[1][1] == 0.0);
  CHECK(std::abs(tab.gradient_at_zero + ex().k1()) <= 1e-4);
  // around an excited state the quadratic term 10 phi^3 h^2 breaks oddness at second order
  CHECK(tab.odd_defect <= 1e-7);
  CHECK(std::isfinite(tab.mixed_jump));
}

TEST_CASE("chart is odd around the trivial state") {
  const auto& tv = fixtures::trivial();
  const auto& z = ex().ref.zero();
  auto shape = project(tv.spectrum, remainder_shape()).remainder;
  auto tab = chart_sample({-1e-4, 1e-4}, {-1e-4, 1e-4}, shape, V(), z, tv.spectrum, {}, 2);
  CHECK(tab.odd_defect <= 1e-15);
  CHECK(tab.lambda_dot[0][0] != 0.0);
}

TEST_CASE("contraction radius") {
  ShootConfig cfg;
  const auto dir = single(0.0, 1.0);
  const double rad = contraction_radius(dir, V(), phi1(), ex().spectrum, cfg, 16.0, 0.1);
  MESSAGE("contraction radius along the remainder shape: " << rad);
  CHECK(rad > 1e-2);
  CHECK(rad < 16.0);
  cfg.budget = 100.0;
  CHECK(lp_shoot(scaled(dir, 0.5 * rad), V(), phi1(), ex().spectrum, cfg).converged);
}
