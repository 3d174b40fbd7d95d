#pragma once

#include "sdqp/instances.hpp"
#include "sdqp/problem.hpp"

namespace sdqp::test {

/// Unit simplex in R^n with objective xᵀQx + cᵀx.
inline QpInstance simplex_instance(const RowMatrix& Q, const Vector& c) {
  QpInstance inst;
  inst.name = "simplex";
  inst.Q = Q;
  inst.c = c;
  const auto n = c.size();
  inst.eq.push_back({Vector::Ones(n), 1.0});
  inst.lower = Vector::Zero(n);
  inst.upper = Vector::Ones(n);
  inst.finalize();
  return inst;
}

/// Random PSD matrix of rank r (r = n gives PD with probability one).
inline RowMatrix random_psd(Eigen::Index n, Eigen::Index r, Rng& rng) {
  Matrix G(n, r);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < r; ++j) G(i, j) = rng.normal();
  }
  RowMatrix Q = G * G.transpose() / static_cast<double>(r);
  RowMatrix sym = (Q + Q.transpose()) * 0.5;
  return sym;
}

inline Vector random_vector(Eigen::Index n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.uniform(lo, hi);
  return v;
}

}  // namespace sdqp::test
