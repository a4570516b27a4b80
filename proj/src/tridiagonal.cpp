#include "tridiagonal.hpp"

#include <lapacke.h>

namespace wavelab::detail {

bool solve_tridiagonal(std::vector<double> lower, std::vector<double> diag, std::vector<double> upper,
                       std::span<double> rhs) {
  const auto n = static_cast<lapack_int>(diag.size());
  const lapack_int info = LAPACKE_dgtsv(LAPACK_COL_MAJOR, n, 1, lower.data(), diag.data(), upper.data(),
                                        rhs.data(), n);
  return info == 0;
}

}  // namespace wavelab::detail
