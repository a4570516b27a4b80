#include "doctest.h"

#include <cmath>

#include "wavelab/errors.hpp"
#include "wavelab/radial_core.hpp"

using namespace wavelab;

TEST_CASE("grid nodes are uniform and start at zero") {
  RadialGrid g(10.0, 100);
  CHECK(g.dr() == doctest::Approx(0.1));
  CHECK(g.size() == 101);
  CHECK(g.r(0) == 0.0);
  CHECK(g.r(100) == doctest::Approx(10.0));
  CHECK(g.index_at_or_below(0.35) == 3);
  CHECK(g.index_at_or_below(0.3) == 3);
  CHECK(g.index_at_or_below(50.0) == 100);
  CHECK_THROWS_AS(RadialGrid(-1.0, 10), ArgumentError);
}

TEST_CASE("from_rv recovers a smooth profile including the origin") {
  RadialGrid g(5.0, 500);
  auto f = Field::from_function(g, [](double r) { return std::exp(-r * r); });
  auto back = Field::from_rv(g, f.rv());
  for (std::size_t j = 1; j < g.size(); ++j) CHECK(back[j] == doctest::Approx(f[j]).epsilon(1e-14));
  CHECK(back[0] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("mismatched grids are rejected") {
  Field a(RadialGrid(1.0, 10));
  Field b(RadialGrid(1.0, 20));
  CHECK_THROWS_AS(a += b, DimensionError);
  CHECK_THROWS_AS(Field(RadialGrid(1.0, 10), std::vector<double>(5)), DimensionError);
}

TEST_CASE("power-law potential carries its decay class") {
  RadialGrid g(50.0, 1000);
  auto V = Potential::power_law(g, 40.0, 2.5);
  CHECK(V.beta() == 5.0);
  CHECK(V[0] == 40.0);
  CHECK(V.at(1.0) == doctest::Approx(40.0 / std::pow(2.0, 2.5)));
  CHECK(std::isfinite(V.decay_constant()));
  CHECK_THROWS_AS(Potential::power_law(g, 1.0, 0.9), ArgumentError);
}

TEST_CASE("spherical well halves the node on the edge") {
  RadialGrid g(4.0, 400);
  auto V = Potential::spherical_well(g, 4.0, 1.0);
  CHECK(V[99] == 4.0);
  CHECK(V[100] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(V[101] == 0.0);
}

TEST_CASE("space-time fields need monotone times on one grid") {
  RadialGrid g(1.0, 10);
  SpaceTimeField s;
  s.push_back(0.0, Field(g));
  s.push_back(0.1, Field(g));
  CHECK_NOTHROW(s.validate());
  s.push_back(0.05, Field(g));
  CHECK_THROWS(s.validate());
}
