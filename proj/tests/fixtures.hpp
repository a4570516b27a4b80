#pragma once

#include <stdexcept>

#include "wavelab/spectral.hpp"
#include "wavelab/steady_states.hpp"

namespace fixtures {

// V0 = 40, s = 2.5 has two bound states for -Lap - V; the resulting steady states include a
// positive ground state and a one-node excited state with a single unstable direction.
struct Reference {
  wavelab::RadialGrid grid{100.0, 4096};
  wavelab::Potential potential = wavelab::Potential::power_law(grid, 40.0, 2.5);
  std::vector<wavelab::SteadyState> states = wavelab::find_steady_states(potential);

  const wavelab::SteadyState& ground() const { return pick(0, 1.0); }
  const wavelab::SteadyState& excited() const { return pick(1, 1.0); }

  const wavelab::SteadyState& zero() const {
    for (const auto& s : states)
      if (s.a == 0.0) return s;
    throw std::runtime_error("trivial steady state missing");
  }

  const wavelab::SteadyState& pick(int nodes, double sign) const {
    for (const auto& s : states)
      if (s.nodes == nodes && s.a * sign > 0.0) return s;
    throw std::runtime_error("reference steady state missing");
  }
};

inline const Reference& reference() {
  static const Reference ref;
  return ref;
}

struct Excited {
  const Reference& ref = reference();
  wavelab::LinearizedOperator op = wavelab::linearize(ref.potential, ref.excited());
  wavelab::Spectrum spectrum = wavelab::negative_spectrum(op);
  double k1() const { return spectrum.k.at(0); }
};

inline const Excited& excited() {
  static const Excited ex;
  return ex;
}

// Around phi = 0 the same potential has two unstable directions.
struct Trivial {
  const Reference& ref = reference();
  wavelab::Spectrum spectrum = wavelab::negative_spectrum(wavelab::linearize(ref.potential, ref.zero()));
};

inline const Trivial& trivial() {
  static const Trivial t;
  return t;
}

}  // namespace fixtures
