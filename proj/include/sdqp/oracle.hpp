#pragma once

#include "sdqp/problem.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace sdqp {

/// KKT point of min xᵀQx + cᵀx over E, I and bounds.
///
/// Bounds become inequality rows after the general ones: x_j ≥ l_j then −x_j ≥ −u_j,
/// in that order per coordinate, only for finite bounds.
struct KktSolution {
  Vector x;
  double objective = 0.0;
  Vector eq_multipliers;    // ν, free sign
  Vector ineq_multipliers;  // μ ≥ 0, general rows then bound rows
  std::vector<std::size_t> active;  // indices into the inequality rows
  double stationarity = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  double complementarity = 0.0;
  bool enumerated = false;  // false: primal active-set path
};

class OracleRefused : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleOptions {
  /// Largest number of active sets enumeration may visit.
  std::uint64_t enumeration_budget = 1'000'000;
  /// Beyond the budget, run the primal active-set method instead of refusing.
  bool allow_active_set = true;
  double tol = 1e-9;
};

/// Reference convex-QP solve for small instances (n ≤ 30). Both paths return
/// a point certified by the KKT residuals in the result.
KktSolution oracle_solve_qp(const QpInstance& inst, const OracleOptions& opts = {});

/// Number of active sets enumeration would visit (saturates at UINT64_MAX).
std::uint64_t oracle_enumeration_count(const QpInstance& inst);

/// min ½λᵀHλ + hᵀλ over the unit simplex by enumerating all 2ᵏ−1 faces (k ≤ 8).
Vector oracle_simplex_qp(const Matrix& H, const Vector& h);

}  // namespace sdqp
