#pragma once

#include <span>
#include <vector>

namespace wavelab::detail {

/// Solves a general tridiagonal system in place: rhs is overwritten with the solution.
/// lower/upper have size n-1. Returns false when the matrix is singular.
bool solve_tridiagonal(std::vector<double> lower, std::vector<double> diag, std::vector<double> upper,
                       std::span<double> rhs);

}  // namespace wavelab::detail
