#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "wavelab/errors.hpp"
#include "wavelab/norms.hpp"

using namespace wavelab;
using std::numbers::pi;

namespace {

Field gaussian(const RadialGrid& g, double width = 1.0) {
  return Field::from_function(g, [width](double r) { return std::exp(-r * r / (width * width)); });
}

}  // namespace

TEST_CASE("energy of trivial states") {
  RadialGrid g(10.0, 400);
  auto V = Potential::power_law(g, 5.0, 2.0);
  CHECK(energy(State::zero(g), V) == 0.0);

  auto v = gaussian(g);
  State s(Field(g), v);
  CHECK(energy(s, V) == doctest::Approx(0.5 * inner(v, v)).epsilon(1e-14));
}

TEST_CASE("static energy agrees with a direct evaluation of the functional") {
  RadialGrid g(10.0, 800);
  auto V = Potential::power_law(g, 5.0, 2.0);
  auto phi = Field::from_function(g, [](double r) { return 1.0 / (1.0 + r * r); });

  // J in v = r u form, summed independently of the library.
  const double dr = g.dr();
  double grad = 0.0, rest = 0.0;
  for (std::size_t j = 0; j + 1 < g.size(); ++j) {
    const double dv = g.r(j + 1) * phi[j + 1] - g.r(j) * phi[j];
    grad += dv * dv / (2.0 * dr);
  }
  const double vn = g.r_max() * phi[g.size() - 1];
  grad -= vn * vn / (2.0 * g.r_max());
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double w = (j == 0 || j + 1 == g.size()) ? 0.5 : 1.0;
    const double r = g.r(j), u = phi[j];
    rest += w * r * r * dr * (-V[j] * u * u / 2.0 + std::pow(u, 6) / 6.0);
  }
  const double J = 4.0 * pi * (grad + rest);
  CHECK(energy(State(phi, Field(g)), V) == doctest::Approx(J).epsilon(1e-12));
}

TEST_CASE("gradient term converges to the continuum value") {
  // u = exp(-r^2): 4 pi int u_r^2 r^2 dr / 2 = 3 pi^{3/2} / (4 sqrt 2), plus the sextic term
  // 4 pi int u^6 r^2 dr / 6 = pi^{3/2} / (6 * 6^{3/2})
  const double exact = 3.0 * std::pow(pi, 1.5) / (4.0 * std::sqrt(2.0)) + std::pow(pi, 1.5) / (6.0 * std::pow(6.0, 1.5));
  RadialGrid g(8.0, 1600);
  auto V = Potential::zero(g);
  CHECK(energy(State(gaussian(g), Field(g)), V) == doctest::Approx(exact).epsilon(1e-5));
}

TEST_CASE("energy_norm basics") {
  RadialGrid g(10.0, 1000);
  CHECK(energy_norm(State::zero(g)) == 0.0);
  auto v = gaussian(g);
  CHECK(energy_norm(State(Field(g), v)) == doctest::Approx(l2_norm(v)).epsilon(1e-14));
  CHECK_THROWS_AS(energy_norm(State::zero(g), 3.0, 2.0), ArgumentError);
  CHECK_THROWS_AS(energy_norm(State::zero(g), 0.0, 11.0), ArgumentError);
}

TEST_CASE("energy_norm on a shell matches a closed-form polynomial integral") {
  // u = r^2 (no velocity): 4 pi int_a^b 4 r^4 dr = 16 pi (b^5 - a^5) / 5
  const double a = 0.73, b = 1.91;
  const double exact = std::sqrt(16.0 * pi * (std::pow(b, 5) - std::pow(a, 5)) / 5.0);
  double prev_err = 1.0;
  for (int n : {400, 800, 1600}) {
    RadialGrid g(3.0, n);
    auto u = Field::from_function(g, [](double r) { return r * r; });
    const double err = std::abs(energy_norm(State(u, Field(g)), a, b) - exact) / exact;
    CHECK(err < 1e-4);
    CHECK(err < prev_err);
    prev_err = err;
  }
}

TEST_CASE("energy_norm is homogeneous of degree one") {
  RadialGrid g(10.0, 500);
  State s(gaussian(g), gaussian(g, 2.0));
  CHECK(energy_norm(-3.0 * s, 1.0, 4.0) == doctest::Approx(3.0 * energy_norm(s, 1.0, 4.0)).epsilon(1e-14));
}

TEST_CASE("lorentz norm of the unit-ball indicator") {
  const double exact = 1.5 * std::pow(4.0 * pi / 3.0, 2.0 / 3.0);
  CHECK(exact == doctest::Approx(3.8978).epsilon(1e-4));
  RadialGrid g(4.0, 4000);
  // node at r = 1 sits on the edge; keep it out so the cell union is the ball [0, 1 - dr/2)
  auto f = Field::from_function(g, [](double r) { return r < 1.0 - 1e-12 ? 1.0 : 0.0; });
  const double ball = 4.0 * pi / 3.0 * std::pow(1.0 - g.dr() / 2.0, 3);
  CHECK(lorentz_norm(f, 1.5, 1.0) == doctest::Approx(1.5 * std::pow(ball, 2.0 / 3.0)).epsilon(1e-12));
  CHECK(std::abs(lorentz_norm(f, 1.5, 1.0) - exact) < 1e-3 * exact);
  CHECK(lorentz_norm(Field(g), 1.5, 1.0) == 0.0);
}

TEST_CASE("weak-L3 norm of a regularized 1/r converges") {
  const double exact = std::cbrt(4.0 * pi / 3.0);
  double prev = 1.0;
  for (int n : {4000, 8000, 16000}) {
    RadialGrid g(8.0, n);
    auto f = Field::from_function(g, [](double r) { return 1.0 / std::max(r, 1.0); });
    const double err = std::abs(lorentz_norm(f, 3.0, kInfinity) - exact) / exact;
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("lorentz norm with q = p is the L^p norm") {
  RadialGrid g(10.0, 700);
  std::mt19937 rng(7);
  std::normal_distribution<double> nd;
  Field f(g);
  for (std::size_t j = 0; j < f.size(); ++j) f[j] = nd(rng);
  for (double p : {1.0, 1.5, 2.0, 3.0, 6.0}) {
    CHECK(lorentz_norm(f, p, p) == doctest::Approx(lp_norm(f, p)).epsilon(1e-10));
  }
}

TEST_CASE("lorentz norm is monotone and sign invariant") {
  RadialGrid g(10.0, 300);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  Field f(g), h(g);
  for (std::size_t j = 0; j < f.size(); ++j) {
    f[j] = ud(rng) - 0.5;
    h[j] = std::abs(f[j]) + ud(rng);
  }
  for (auto [p, q] : {std::pair{1.5, 1.0}, {3.0, kInfinity}, {6.0, 2.0}}) {
    CHECK(lorentz_norm(f, p, q) <= lorentz_norm(h, p, q));
    CHECK(lorentz_norm(-f, p, q) == lorentz_norm(f, p, q));
  }
  CHECK(lorentz_norm(f, kInfinity, kInfinity) == f.max_abs());
  CHECK_THROWS_AS(lorentz_norm(f, 0.0, 1.0), ArgumentError);
  CHECK_THROWS_AS(lorentz_norm(f, -2.0, 1.0), ArgumentError);
}

TEST_CASE("reversed norm reductions") {
  RadialGrid g(10.0, 300);
  auto prof = gaussian(g, 2.0);
  SpaceTimeField still, sep, single, zero;
  std::vector<double> a;
  for (int k = 0; k <= 200; ++k) {
    const double t = 0.01 * k;
    still.push_back(t, prof);
    a.push_back(std::cos(3.0 * t) + 0.5);
    sep.push_back(t, a.back() * prof);
    zero.push_back(t, Field(g));
  }
  single.push_back(0.0, prof);

  CHECK(reversed_norm(zero, 6.0, 2.0, 2.0) == 0.0);
  CHECK(reversed_norm(still, 6.0, 2.0, kInfinity) == doctest::Approx(lorentz_norm(prof, 6.0, 2.0)).epsilon(1e-14));
  CHECK(reversed_norm(single, 1.5, 1.0, 2.0) == doctest::Approx(lorentz_norm(prof, 1.5, 1.0)).epsilon(1e-14));

  double a2 = 0.0;
  for (std::size_t k = 0; k + 1 < a.size(); ++k) a2 += 0.005 * (a[k] * a[k] + a[k + 1] * a[k + 1]);
  CHECK(reversed_norm(sep, 1.5, 1.0, 2.0) == doctest::Approx(std::sqrt(a2) * lorentz_norm(prof, 1.5, 1.0)).epsilon(1e-12));
  CHECK(reversed_norm(sep, kInfinity, kInfinity, kInfinity) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK_THROWS_AS(reversed_norm(SpaceTimeField{}, 6.0, 2.0, 2.0), ArgumentError);
}

TEST_CASE("strichartz norm factorizes on separable fields") {
  RadialGrid g(10.0, 400);
  auto prof = gaussian(g);
  SpaceTimeField sep;
  std::vector<double> a;
  for (int k = 0; k <= 100; ++k) {
    const double t = 0.02 * k;
    a.push_back(std::exp(-t));
    sep.push_back(t, a.back() * prof);
  }
  double a5 = 0.0;
  for (std::size_t k = 0; k + 1 < a.size(); ++k) a5 += 0.01 * (std::pow(a[k], 5) + std::pow(a[k + 1], 5));
  double g10 = 0.0;
  const auto w = volume_weights(g);
  for (std::size_t j = 0; j < w.size(); ++j) g10 += w[j] * std::pow(prof[j], 10);
  CHECK(strichartz_norm(sep) == doctest::Approx(std::pow(a5, 0.2) * std::pow(g10, 0.1)).epsilon(1e-12));
}

TEST_CASE("strichartz norm of a decaying Gaussian against a Richardson reference") {
  // u = e^{-t} exp(-r^2) on [0, 1]:
  // ((1 - e^{-5}) / 5)^{1/5} * (4 pi int e^{-10 r^2} r^2 dr)^{1/10}
  const double exact = std::pow((1.0 - std::exp(-5.0)) / 5.0, 0.2) * std::pow(std::pow(pi / 10.0, 1.5), 0.1);
  auto norm_at = [](int steps) {
    RadialGrid g(6.0, 600);
    auto prof = gaussian(g);
    SpaceTimeField f;
    for (int k = 0; k <= steps; ++k) {
      const double t = static_cast<double>(k) / steps;
      f.push_back(t, std::exp(-t) * prof);
    }
    return strichartz_norm(f);
  };
  const double coarse = norm_at(50), fine = norm_at(100);
  const double richardson = (4.0 * fine - coarse) / 3.0;
  CHECK(std::abs(fine - exact) < std::abs(coarse - exact));
  CHECK(std::abs(richardson - exact) < 1e-7 * exact);
}
