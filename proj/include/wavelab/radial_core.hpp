#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace wavelab {

/// Uniform radial grid r_j = j * dr, j = 0..n, on [0, r_max].
class RadialGrid {
 public:
  RadialGrid() = default;
  RadialGrid(double r_max, int cells);

  double r_max() const { return r_max_; }
  int cells() const { return cells_; }
  double dr() const { return dr_; }
  /// Number of nodes, cells() + 1.
  std::size_t size() const { return static_cast<std::size_t>(cells_) + 1; }
  double r(std::size_t j) const { return static_cast<double>(j) * dr_; }
  std::vector<double> nodes() const;

  /// Largest node index with r_j <= radius (clamped to the grid).
  std::size_t index_at_or_below(double radius) const;

  bool operator==(const RadialGrid& other) const {
    return cells_ == other.cells_ && r_max_ == other.r_max_;
  }

 private:
  double r_max_ = 0.0;
  int cells_ = 0;
  double dr_ = 0.0;
};

/// Throws DimensionError when the grids differ.
void require_same_grid(const RadialGrid& a, const RadialGrid& b, const char* context);

/// Real radial samples u(r_j).
class Field {
 public:
  Field() = default;
  explicit Field(const RadialGrid& grid);
  Field(const RadialGrid& grid, std::vector<double> values);

  static Field from_function(const RadialGrid& grid, const std::function<double(double)>& f);
  /// Builds u = v / r from v = r*u; u(0) by quadratic extrapolation.
  static Field from_rv(const RadialGrid& grid, std::span<const double> rv);

  const RadialGrid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t j) const { return values_[j]; }
  double& operator[](std::size_t j) { return values_[j]; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  /// v_j = r_j * u_j.
  std::vector<double> rv() const;
  double max_abs() const;
  bool all_finite() const;

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double s);

 private:
  RadialGrid grid_;
  std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);
Field operator-(Field a);

/// Phase-space point (u, u_t).
struct State {
  Field position;
  Field velocity;

  State() = default;
  State(Field u, Field ut);
  static State zero(const RadialGrid& grid);
  const RadialGrid& grid() const { return position.grid(); }

  State& operator+=(const State& other);
  State& operator-=(const State& other);
  State& operator*=(double s);
};

State operator+(State a, const State& b);
State operator-(State a, const State& b);
State operator*(double s, State a);

/// Radial potential V(r) in the class with sup (1+r)^beta |V| < infinity, beta > 2.
class Potential {
 public:
  /// Samples plus an optional closed form used by the ODE shooter between nodes.
  Potential(Field values, double beta, std::string family, double amplitude,
            std::function<double(double)> closed_form = {});

  /// V(r) = V0 (1 + r^2)^(-s); beta = 2s.
  static Potential power_law(const RadialGrid& grid, double amplitude, double s);
  /// V(r) = V0 (1 - (r/a)^2)^3 for r < a, zero outside.
  static Potential bump(const RadialGrid& grid, double amplitude, double radius);
  /// V(r) = V0 on r < a, sampled as the fraction of each node's cell inside the well
  /// (a node sitting exactly on r = a gets V0/2).
  static Potential spherical_well(const RadialGrid& grid, double amplitude, double radius);
  static Potential zero(const RadialGrid& grid);

  const Field& values() const { return values_; }
  const RadialGrid& grid() const { return values_.grid(); }
  double operator[](std::size_t j) const { return values_[j]; }
  double beta() const { return beta_; }
  const std::string& family() const { return family_; }
  double amplitude() const { return amplitude_; }
  /// V at an arbitrary radius: closed form when known, linear interpolation otherwise.
  double at(double r) const;
  /// sup_j (1 + r_j)^beta |V(r_j)|.
  double decay_constant() const;

 private:
  Field values_;
  double beta_;
  std::string family_;
  double amplitude_;
  std::function<double(double)> closed_form_;
};

/// Radial frames u(t_k, r_j) on a common grid.
struct SpaceTimeField {
  std::vector<double> times;
  std::vector<Field> frames;

  bool empty() const { return frames.empty(); }
  std::size_t size() const { return frames.size(); }
  const RadialGrid& grid() const;
  void push_back(double t, Field frame);
  /// Throws unless times increase and all frames share one grid.
  void validate() const;
};

}  // namespace wavelab
