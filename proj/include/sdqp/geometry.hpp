#pragma once

#include "sdqp/problem.hpp"

namespace sdqp {

/// Euclidean projection onto the unit simplex {x ≥ 0, Σx = 1} by variable fixing
/// with an in-pass threshold update (Gauss-Seidel flavour of Michelot's method).
Vector project_simplex_fast(const Vector& y);

/// Reference projection: descending sort, running-threshold rule.
Vector project_simplex_sort(const Vector& y);

}  // namespace sdqp
