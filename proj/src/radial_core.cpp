#include "wavelab/radial_core.hpp"

#include <algorithm>
#include <cmath>

#include "wavelab/errors.hpp"

namespace wavelab {

RadialGrid::RadialGrid(double r_max, int cells) : r_max_(r_max), cells_(cells) {
  if (!(r_max > 0.0) || !std::isfinite(r_max)) throw ArgumentError("RadialGrid: r_max must be positive");
  if (cells < 4) throw ArgumentError("RadialGrid: need at least 4 cells");
  dr_ = r_max / cells;
}

std::vector<double> RadialGrid::nodes() const {
  std::vector<double> out(size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = r(j);
  return out;
}

std::size_t RadialGrid::index_at_or_below(double radius) const {
  if (radius <= 0.0) return 0;
  const auto j = static_cast<std::size_t>(std::floor(radius / dr_ + 1e-12));
  return std::min(j, static_cast<std::size_t>(cells_));
}

void require_same_grid(const RadialGrid& a, const RadialGrid& b, const char* context) {
  if (!(a == b)) throw DimensionError(std::string(context) + ": grids differ");
}

Field::Field(const RadialGrid& grid) : grid_(grid), values_(grid.size(), 0.0) {}

Field::Field(const RadialGrid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) throw DimensionError("Field: length does not match grid");
}

Field Field::from_function(const RadialGrid& grid, const std::function<double(double)>& f) {
  Field out(grid);
  for (std::size_t j = 0; j < out.size(); ++j) out.values_[j] = f(grid.r(j));
  return out;
}

Field Field::from_rv(const RadialGrid& grid, std::span<const double> rv) {
  if (rv.size() != grid.size()) throw DimensionError("Field::from_rv: length does not match grid");
  Field out(grid);
  for (std::size_t j = 1; j < rv.size(); ++j) out.values_[j] = rv[j] / grid.r(j);
  out.values_[0] = 3.0 * out.values_[1] - 3.0 * out.values_[2] + out.values_[3];
  return out;
}

std::vector<double> Field::rv() const {
  std::vector<double> out(values_.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = grid_.r(j) * values_[j];
  return out;
}

double Field::max_abs() const {
  double m = 0.0;
  for (double x : values_) m = std::max(m, std::abs(x));
  return m;
}

bool Field::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
}

Field& Field::operator+=(const Field& other) {
  require_same_grid(grid_, other.grid_, "Field::operator+=");
  for (std::size_t j = 0; j < values_.size(); ++j) values_[j] += other.values_[j];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  require_same_grid(grid_, other.grid_, "Field::operator-=");
  for (std::size_t j = 0; j < values_.size(); ++j) values_[j] -= other.values_[j];
  return *this;
}

Field& Field::operator*=(double s) {
  for (double& x : values_) x *= s;
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }
Field operator-(Field a) { return a *= -1.0; }

State::State(Field u, Field ut) : position(std::move(u)), velocity(std::move(ut)) {
  require_same_grid(position.grid(), velocity.grid(), "State");
}

State State::zero(const RadialGrid& grid) { return State(Field(grid), Field(grid)); }

State& State::operator+=(const State& other) {
  position += other.position;
  velocity += other.velocity;
  return *this;
}

State& State::operator-=(const State& other) {
  position -= other.position;
  velocity -= other.velocity;
  return *this;
}

State& State::operator*=(double s) {
  position *= s;
  velocity *= s;
  return *this;
}

State operator+(State a, const State& b) { return a += b; }
State operator-(State a, const State& b) { return a -= b; }
State operator*(double s, State a) { return a *= s; }

Potential::Potential(Field values, double beta, std::string family, double amplitude,
                     std::function<double(double)> closed_form)
    : values_(std::move(values)),
      beta_(beta),
      family_(std::move(family)),
      amplitude_(amplitude),
      closed_form_(std::move(closed_form)) {
  if (!(beta_ > 2.0)) throw ArgumentError("Potential: decay exponent beta must exceed 2");
  if (!values_.all_finite()) throw NumericalError("Potential: non-finite samples");
}

Potential Potential::power_law(const RadialGrid& grid, double amplitude, double s) {
  if (!(s > 1.0)) throw ArgumentError("Potential::power_law: need s > 1 so that beta = 2s > 2");
  auto f = [amplitude, s](double r) { return amplitude * std::pow(1.0 + r * r, -s); };
  return Potential(Field::from_function(grid, f), 2.0 * s, "power", amplitude, f);
}

Potential Potential::bump(const RadialGrid& grid, double amplitude, double radius) {
  if (!(radius > 0.0)) throw ArgumentError("Potential::bump: radius must be positive");
  auto f = [amplitude, radius](double r) {
    if (r >= radius) return 0.0;
    const double x = 1.0 - (r / radius) * (r / radius);
    return amplitude * x * x * x;
  };
  // Compact support: any beta is admissible; record a large one.
  return Potential(Field::from_function(grid, f), 16.0, "bump", amplitude, f);
}

Potential Potential::spherical_well(const RadialGrid& grid, double amplitude, double radius) {
  if (!(radius > 0.0)) throw ArgumentError("Potential::spherical_well: radius must be positive");
  Field v(grid);
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double inside = (radius - (grid.r(j) - 0.5 * grid.dr())) / grid.dr();
    v[j] = amplitude * std::clamp(inside, 0.0, 1.0);
  }
  auto f = [amplitude, radius](double r) { return r < radius ? amplitude : 0.0; };
  return Potential(std::move(v), 16.0, "well", amplitude, f);
}

Potential Potential::zero(const RadialGrid& grid) {
  return Potential(Field(grid), 16.0, "zero", 0.0, [](double) { return 0.0; });
}

double Potential::at(double r) const {
  if (closed_form_) return closed_form_(r);
  const auto& g = grid();
  if (r >= g.r_max()) return values_[g.size() - 1];
  const double x = r / g.dr();
  const auto j = static_cast<std::size_t>(x);
  const double w = x - static_cast<double>(j);
  return (1.0 - w) * values_[j] + w * values_[j + 1];
}

double Potential::decay_constant() const {
  double m = 0.0;
  const auto& g = grid();
  for (std::size_t j = 0; j < values_.size(); ++j)
    m = std::max(m, std::pow(1.0 + g.r(j), beta_) * std::abs(values_[j]));
  return m;
}

const RadialGrid& SpaceTimeField::grid() const {
  if (frames.empty()) throw ArgumentError("SpaceTimeField: no frames");
  return frames.front().grid();
}

void SpaceTimeField::push_back(double t, Field frame) {
  times.push_back(t);
  frames.push_back(std::move(frame));
}

void SpaceTimeField::validate() const {
  if (times.size() != frames.size()) throw DimensionError("SpaceTimeField: times/frames length mismatch");
  const double direction = frames.size() > 1 && times[1] < times[0] ? -1.0 : 1.0;
  for (std::size_t k = 1; k < frames.size(); ++k) {
    require_same_grid(frames[0].grid(), frames[k].grid(), "SpaceTimeField");
    if (!(direction * (times[k] - times[k - 1]) > 0.0))
      throw ArgumentError("SpaceTimeField: sample times must be strictly monotone");
  }
}

}  // namespace wavelab
