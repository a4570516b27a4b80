#include "doctest.h"

#include <cmath>

#include "fixtures.hpp"
#include "wavelab/errors.hpp"
#include "wavelab/evolution.hpp"
#include "wavelab/norms.hpp"

using namespace wavelab;

namespace {

double bump(double r, double center, double width) {
  const double x = (r - center) / width;
  return std::abs(x) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - x * x)) : 0.0;
}

double gauss(double r) { return std::exp(-0.25 * r * r); }

// d'Alembert on v = r u: u(t, r) = [G(r + t) + G(r - t)] / (2 r), G the odd extension of r f(r).
Field dalembert(const RadialGrid& g, double t) {
  auto G = [](double s) { return s * gauss(std::abs(s)); };
  std::vector<double> v(g.size());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = 0.5 * (G(g.r(j) + t) + G(g.r(j) - t));
  return Field::from_rv(g, v);
}

double free_error(int n) {
  // the Gaussian is below 1e-10 past r = 9.6, so r_max = 22 holds the whole cone up to t = 10
  RadialGrid g(22.0, n);
  auto u0 = Field::from_function(g, gauss);
  EvolveConfig c;
  c.kind = FlowKind::free;
  c.t_end = 10.0;
  auto tr = evolve(State(u0, Field(g)), Potential::zero(g), nullptr, nullptr, c);
  return l2_norm(tr.u.frames.back() - dalembert(g, 10.0));
}

}  // namespace

TEST_CASE("free flow matches the method of characteristics and converges at second order") {
  const double coarse = free_error(2048);
  const double fine = free_error(4096);
  CHECK(fine <= 1e-4);
  CHECK(coarse / fine == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("energy is conserved for smooth compact data in the deep well") {
  // r_max sized causally: support 5 plus t_end 20 plus margin
  RadialGrid g(30.0, 4096);
  auto V = Potential::power_law(g, 40.0, 2.5);
  auto u0 = Field::from_function(g, [](double r) { return bump(r, 0.0, 5.0); });
  EvolveConfig c;
  c.t_end = 20.0;
  auto tr = evolve(State(u0, Field(g)), V, nullptr, nullptr, c);
  REQUIRE(tr.status == RunStatus::completed);
  CHECK(tr.energy.front() == doctest::Approx(energy(State(u0, Field(g)), V)).epsilon(1e-12));
  const double E0 = tr.shadow_energy.front();
  double drift = 0.0, raw = 0.0;
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    drift = std::max(drift, std::abs(tr.shadow_energy[i] - E0));
    raw = std::max(raw, std::abs(tr.energy[i] - tr.energy.front()));
  }
  CHECK(drift / std::max(std::abs(E0), 1.0) <= 1e-6);

  // the unmodified discrete energy oscillates at O(dt^2)
  c.cfl = 0.25;
  auto half = evolve(State(u0, Field(g)), V, nullptr, nullptr, c);
  double raw_half = 0.0;
  for (std::size_t i = 0; i < half.times.size(); ++i) raw_half = std::max(raw_half, std::abs(half.energy[i] - half.energy.front()));
  CHECK(raw / raw_half == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("the ground state is stationary under the full nonlinear flow") {
  const auto& ref = fixtures::reference();
  const auto& Q = ref.ground();
  EvolveConfig c;
  c.t_end = 20.0;
  c.record_every = 50;
  c.enforce_causal = false;  // the data is the steady state itself, boundary value frozen at its tail
  auto tr = evolve(State(Q.profile, Field(ref.grid)), ref.potential, nullptr, nullptr, c);
  double worst = 0.0;
  for (std::size_t k = 0; k < tr.u.size(); ++k)
    worst = std::max(worst, energy_norm(State(tr.u.frames[k] - Q.profile, tr.ut.frames[k])));
  CHECK(worst <= 1e-4);
}

TEST_CASE("linearized flow: the growing mode stays rank one") {
  const auto& ex = fixtures::excited();
  const auto& phi = ex.ref.excited();
  const auto& rho = ex.spectrum.modes[0];
  const double k = ex.k1();
  const double mu = 1e-3;
  EvolveConfig c;
  c.kind = FlowKind::linearized;
  c.t_end = 3.0 / k;
  c.record_every = 10;
  auto tr = evolve(State(phi.profile + mu * rho, mu * k * rho), ex.ref.potential, &phi, &ex.spectrum, c);
  double worst = 0.0;
  for (std::size_t m = 0; m < tr.u.size(); ++m) {
    const double t = tr.u.times[m];
    const Field exact = mu * std::exp(k * t) * rho;
    worst = std::max(worst, l2_norm(tr.u.frames[m] - phi.profile - exact) / l2_norm(exact));
  }
  CHECK(worst <= 1e-3);
}

TEST_CASE("linearized flow: the stable mode decays at rate k") {
  const auto& ex = fixtures::excited();
  const auto& phi = ex.ref.excited();
  const auto& rho = ex.spectrum.modes[0];
  const double k = ex.k1();
  EvolveConfig c;
  c.kind = FlowKind::linearized;
  // leapfrog's discrete rate differs from k at O(k^2 dt^2), which seeds the growing branch at about
  // k^2 dt^2 / 48; past t ~ 2/k that seed is no longer small next to e^{-kt}
  c.t_end = 2.0 / k;
  auto tr = evolve(State(phi.profile + 1e-3 * rho, -1e-3 * k * rho), ex.ref.potential, &phi, &ex.spectrum, c);
  const auto& lam = tr.lambda[0];
  const double rate = -std::log(lam.back() / lam.front()) / (tr.times.back() - tr.times.front());
  CHECK(std::abs(rate - k) / k <= 1e-3);
}

TEST_CASE("finite speed of propagation") {
  RadialGrid g(40.0, 4096);
  auto V = Potential::power_law(g, 40.0, 2.5);
  const double a = 3.0;
  auto u0 = Field::from_function(g, [a](double r) { return bump(r, 0.0, a); });
  EvolveConfig c;
  c.t_end = 10.0;
  c.record_every = 100;
  auto tr = evolve(State(u0, Field(g)), V, nullptr, nullptr, c);
  const double cfl = std::abs(tr.dt) / g.dr();
  for (std::size_t k = 0; k < tr.u.size(); ++k) {
    const double t = tr.u.times[k];
    double beyond_stencil = 0.0, beyond_cone = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double r = g.r(j);
      if (r > a + t / cfl + 2.0 * g.dr()) beyond_stencil = std::max(beyond_stencil, std::abs(tr.u.frames[k][j]));
      if (r > a + t + 0.5) beyond_cone = std::max(beyond_cone, std::abs(tr.u.frames[k][j]));
    }
    CHECK(beyond_stencil == 0.0);
    CHECK(beyond_cone <= 1e-13);
  }
}

TEST_CASE("truncated and untruncated flows agree outside the light cone") {
  const auto& ex = fixtures::excited();
  const auto& phi = ex.ref.excited();
  const auto& rho = ex.spectrum.modes[0];
  const double k = ex.k1();
  State s0(phi.profile + 1e-3 * rho, 1e-3 * k * rho);
  for (auto [full, cut] : {std::pair{FlowKind::nonlinear, FlowKind::truncated_nonlinear},
                           std::pair{FlowKind::linearized, FlowKind::truncated_linear}}) {
    EvolveConfig c;
    c.t_end = 8.0;
    c.record_every = 80;
    c.kind = full;
    auto a = evolve(s0, ex.ref.potential, &phi, nullptr, c);
    c.kind = cut;
    auto b = evolve(s0, ex.ref.potential, &phi, nullptr, c);
    REQUIRE(a.u.size() == b.u.size());
    const double cfl = std::abs(a.dt) / phi.profile.grid().dr();
    for (std::size_t m = 0; m < a.u.size(); ++m) {
      const double t = a.u.times[m];
      double far = 0.0, near = 0.0, scale = (a.u.frames[m] - phi.profile).max_abs();
      for (std::size_t j = 0; j < ex.ref.grid.size(); ++j) {
        const double r = ex.ref.grid.r(j);
        const double d = std::abs(a.u.frames[m][j] - b.u.frames[m][j]);
        if (r > t / cfl + 2.0 * ex.ref.grid.dr()) far = std::max(far, d);
        if (r >= t + 1.0) near = std::max(near, d);
      }
      CHECK(far == 0.0);
      CHECK(near <= 1e-10 * scale);
    }
    // inside the cone the flows differ
    CHECK((a.u.frames.back() - b.u.frames.back()).max_abs() > 1e-8);
  }
}

TEST_CASE("leapfrog is time reversible") {
  RadialGrid g(30.0, 2048);
  auto V = Potential::power_law(g, 40.0, 2.5);
  auto u0 = Field::from_function(g, [](double r) { return 1.5 * bump(r, 2.0, 2.0); });
  auto v0 = Field::from_function(g, [](double r) { return 0.5 * bump(r, 3.0, 1.5); });
  Stepper st(State(u0, v0), V, nullptr, FlowKind::nonlinear, 0.5 * g.dr());
  const auto start = st.h();
  for (int i = 0; i < 2000; ++i) st.step();
  st.reverse();
  for (int i = 0; i < 2000; ++i) st.step();
  double err = 0.0, scale = 0.0;
  for (std::size_t j = 0; j < start.size(); ++j) {
    err = std::max(err, std::abs(st.h()[j] - start[j]));
    scale = std::max(scale, std::abs(start[j]));
  }
  CHECK(err <= 1e-10 * scale);
  CHECK(std::abs(st.time()) < 1e-9);
}

TEST_CASE("configuration guards") {
  RadialGrid g(10.0, 200);
  auto V = Potential::zero(g);
  auto u0 = Field::from_function(g, [](double r) { return bump(r, 0.0, 3.0); });
  EvolveConfig c;
  c.cfl = 0.95;
  c.t_end = 1.0;
  CHECK_THROWS_AS(evolve(State(u0, Field(g)), V, nullptr, nullptr, c), ArgumentError);
  c.cfl = 0.5;
  c.t_end = 8.0;  // support 3 + 8 > 10
  CHECK_THROWS_AS(evolve(State(u0, Field(g)), V, nullptr, nullptr, c), ArgumentError);
  c.t_end = 0.0;
  CHECK_THROWS_AS(evolve(State(u0, Field(g)), V, nullptr, nullptr, c), ArgumentError);
  CHECK(parse_flow_kind("truncated-linear") == FlowKind::truncated_linear);
  CHECK_THROWS_AS(parse_flow_kind("focusing"), ArgumentError);
}

TEST_CASE("overflow guard flags numerical blowup") {
  RadialGrid g(10.0, 200);
  auto V = Potential::power_law(g, 40.0, 2.5);
  auto u0 = Field::from_function(g, [](double r) { return 1e-3 * bump(r, 0.0, 2.0); });
  EvolveConfig c;
  c.kind = FlowKind::linearized;  // linear flow around 0 in a deep well grows like e^{4t}
  c.t_end = 7.0;
  c.overflow_guard = 1.0;
  auto tr = evolve(State(u0, Field(g)), V, nullptr, nullptr, c);
  CHECK(tr.status == RunStatus::blowup_flagged);
  CHECK(tr.times.back() < 7.0);
}

TEST_CASE("backward runs retrace the forward run to second order") {
  RadialGrid g(30.0, 2048);
  auto V = Potential::power_law(g, 2.0, 2.5);
  auto u0 = Field::from_function(g, [](double r) { return bump(r, 3.0, 2.0); });
  EvolveConfig c;
  c.t_end = 5.0;
  auto fwd = evolve(State(u0, Field(g)), V, nullptr, nullptr, c);
  c.t0 = 5.0;
  c.t_end = 0.0;
  c.enforce_causal = false;
  auto back = evolve(fwd.final_state(), V, nullptr, nullptr, c);
  CHECK(back.times.back() == doctest::Approx(0.0));
  CHECK(l2_norm(back.u.frames.back() - u0) < 1e-3 * l2_norm(u0));
}

TEST_CASE("scatter diagnosis") {
  const auto& ref = fixtures::reference();
  const auto& states = ref.states;
  const auto& Q = ref.ground();
  std::size_t iQ = 0, iphi = 0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (&states[i] == &Q) iQ = i;
    if (&states[i] == &ref.excited()) iphi = i;
  }

  SUBCASE("a steady state scatters to itself") {
    EvolveConfig c;
    c.t_end = 20.0;
    c.record_every = 40;
    c.enforce_causal = false;
    auto tr = evolve(State(Q.profile, Field(ref.grid)), ref.potential, nullptr, nullptr, c);
    auto v = scatter_diagnose(tr, states);
    CHECK(v.kind == ScatterKind::scatter_to);
    CHECK(v.index == iQ);
  }

  SUBCASE("small data without bound states scatters to zero") {
    RadialGrid g(60.0, 2048);
    auto V = Potential::power_law(g, 2.0, 2.5);
    auto zero_only = find_steady_states(V);
    REQUIRE(zero_only.size() == 1);
    auto u0 = Field::from_function(g, [](double r) { return 0.1 * bump(r, 0.0, 3.0); });
    EvolveConfig c;
    c.t_end = 40.0;
    c.record_every = 40;
    auto tr = evolve(State(u0, Field(g)), V, nullptr, nullptr, c);
    auto v = scatter_diagnose(tr, zero_only);
    CHECK(v.kind == ScatterKind::scatter_to);
    CHECK(v.final_core_distance[0] < 1e-2);
  }

  SUBCASE("an unstable push leaves the excited state for good") {
    const auto& ex = fixtures::excited();
    const auto& phi = ref.excited();
    const auto& rho = ex.spectrum.modes[0];
    State s0(phi.profile + 0.1 * rho, 0.1 * ex.k1() * rho);
    EvolveConfig c;
    c.t_end = 50.0;
    c.record_every = 40;
    c.enforce_causal = false;
    auto tr = evolve(s0, ref.potential, &phi, &ex.spectrum, c);
    // measured against the excited state alone the run is a departure
    CHECK(scatter_diagnose(tr, {phi}).kind == ScatterKind::departed);
    // against the full list it settles on the ground state (the push is along +rho)
    auto v = scatter_diagnose(tr, states);
    CHECK(v.kind == ScatterKind::scatter_to);
    CHECK(v.index == iQ);
    CHECK(v.index != iphi);
  }
}
