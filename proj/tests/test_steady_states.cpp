#include "doctest.h"

#include <cmath>

#include "fixtures.hpp"
#include "wavelab/errors.hpp"
#include "wavelab/norms.hpp"
#include "wavelab/spectral.hpp"
#include "wavelab/steady_states.hpp"

using namespace wavelab;

TEST_CASE("zero center value shoots the zero solution") {
  RadialGrid g(20.0, 400);
  auto sp = shoot(Potential::zero(g), 0.0);
  CHECK(sp.behavior == EndBehavior::decays);
  CHECK(sp.profile.max_abs() == 0.0);
}

TEST_CASE("without a potential every nonzero start diverges with its own sign") {
  RadialGrid g(20.0, 400);
  auto V = Potential::zero(g);
  for (double a = 0.05; a <= 5.0; a += 0.05) {
    CHECK(shoot(V, a).behavior == EndBehavior::diverges_up);
    CHECK(shoot(V, -a).behavior == EndBehavior::diverges_down);
  }
  auto states = find_steady_states(V);
  REQUIRE(states.size() == 1);
  CHECK(states[0].profile.max_abs() == 0.0);
}

TEST_CASE("shooting output solves the radial ODE up to the finite-difference check's own error") {
  // The centered-difference defect of an exact solution is O(dr^2): halving dr must quarter it.
  auto defect = [](int n) {
    RadialGrid g(10.0, n);
    auto V = Potential::power_law(g, 40.0, 2.5);
    auto sp = shoot(V, 2.0);
    const double dr = g.dr();
    double worst = 0.0;
    for (std::size_t j = 1; g.r(j) < 1.0; ++j) {
      const double r = g.r(j);
      const double lap = (sp.profile[j + 1] - 2.0 * sp.profile[j] + sp.profile[j - 1]) / (dr * dr) +
                         (sp.profile[j + 1] - sp.profile[j - 1]) / (dr * r);
      worst = std::max(worst, std::abs(lap + V[j] * sp.profile[j] - std::pow(sp.profile[j], 5)));
    }
    return worst;
  };
  CHECK(defect(1000) / defect(2000) == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("deep well: a brute-force scan of the end behavior brackets a decaying start") {
  RadialGrid g(100.0, 4096);
  auto V = Potential::power_law(g, 40.0, 2.0);
  int changes = 0;
  auto prev = shoot(V, 0.01).behavior;
  for (int i = 2; i <= 500; ++i) {
    auto b = shoot(V, 0.01 * i).behavior;
    if (b != prev) ++changes;
    prev = b;
  }
  CHECK(changes >= 1);
}

TEST_CASE("shallow well below the bound-state threshold has only the zero state") {
  RadialGrid g(60.0, 2048);
  auto V = Potential::power_law(g, 2.0, 2.5);
  CHECK(negative_spectrum(linearize(V, Field(g))).size() == 0);
  auto states = find_steady_states(V);
  REQUIRE(states.size() == 1);
  CHECK(states[0].profile.max_abs() == 0.0);
}

TEST_CASE("reference well: ground state, excited state, symmetry and ordering") {
  const auto& ref = fixtures::reference();
  const auto& states = ref.states;
  REQUIRE(states.size() >= 5);

  const auto& Q = ref.ground();
  CHECK(Q.nodes == 0);
  CHECK(Q.converged);
  CHECK(Q.residual <= 1e-8);
  CHECK(Q.a == doctest::Approx(2.45262485861).epsilon(1e-9));

  for (const auto& s : states) {
    if (s.profile.max_abs() == 0.0) continue;
    bool mirrored = false;
    for (const auto& t : states) {
      if (t.nodes == s.nodes && std::abs(t.energy - s.energy) < 1e-12 * std::abs(s.energy) &&
          (t.profile + s.profile).max_abs() < 1e-12)
        mirrored = true;
    }
    CHECK(mirrored);
    // ground-state property among nonzero states
    CHECK(Q.energy <= s.energy + 1e-12);
  }

  const auto& phi1 = ref.excited();
  CHECK(phi1.nodes == 1);
  CHECK(phi1.residual <= 1e-8);
  CHECK(phi1.energy > Q.energy);
}

TEST_CASE("steady energy matches the static functional and the tail fit holds") {
  const auto& ref = fixtures::reference();
  for (const auto& s : ref.states) {
    CHECK(s.energy == doctest::Approx(energy(State(s.profile, Field(ref.grid)), ref.potential)).epsilon(1e-14));
    // r phi flattens out: deviation over the last decade stays small relative to c
    if (s.profile.max_abs() > 0.0) {
      CHECK(std::abs(s.tail_coeff) > 0.1);
      CHECK(s.tail_spread < 1e-3 * std::abs(s.tail_coeff) + 1e-3);
    }
  }
}

TEST_CASE("residual: zero field, polish improves shoot output, refinement converges") {
  const auto& ref = fixtures::reference();
  CHECK(residual(Field(ref.grid), ref.potential) == 0.0);
  const auto& Q = ref.ground();
  auto raw = shoot(ref.potential, Q.a);
  CHECK(residual(raw.profile, ref.potential) > Q.residual);

  // continuum quantities converge at second order: compare the energy on grids n, 2n, 4n
  std::vector<double> e;
  for (int n : {1024, 2048, 4096}) {
    RadialGrid g(100.0, n);
    auto V = Potential::power_law(g, 40.0, 2.5);
    auto s = polish(shoot(V, Q.a).profile, V, Q.a);
    CHECK(s.residual <= 1e-8);
    e.push_back(s.energy);
  }
  const double ratio = (e[0] - e[1]) / (e[1] - e[2]);
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("node counting ignores roundoff-level samples") {
  RadialGrid g(10.0, 100);
  auto f = Field::from_function(g, [](double r) { return std::cos(r); });
  CHECK(count_nodes(f) == 3);
  f[50] = 1e-20 * (f[50] > 0 ? -1 : 1);
  CHECK(count_nodes(f) == 3);
}
