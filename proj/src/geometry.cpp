#include "sdqp/geometry.hpp"

#include <algorithm>
#include <functional>
#include <vector>

namespace sdqp {

namespace {

// Clip at the threshold and absorb the leftover rounding into the largest entry
// so the sum is 1 to working precision.
Vector clip_and_normalize(const Vector& y, double tau) {
  Vector x = (y.array() - tau).cwiseMax(0.0);
  const double sum = x.sum();
  if (sum > 0.0) {
    Eigen::Index imax = 0;
    x.maxCoeff(&imax);
    x(imax) += 1.0 - sum;
    if (x(imax) < 0.0) x(imax) = 0.0;
  }
  return x;
}

}  // namespace

Vector project_simplex_fast(const Vector& y) {
  const auto k = y.size();
  if (k == 0) return y;
  if (k == 1) return Vector::Ones(1);

  // Condat's variable fixing: v holds the candidate active set, vt the
  // elements set aside while the threshold rho was too high.
  std::vector<double> v;
  std::vector<double> vt;
  v.reserve(static_cast<std::size_t>(k));
  v.push_back(y(0));
  double rho = y(0) - 1.0;
  for (Eigen::Index i = 1; i < k; ++i) {
    const double yi = y(i);
    if (yi > rho) {
      rho += (yi - rho) / static_cast<double>(v.size() + 1);
      if (rho > yi - 1.0) {
        v.push_back(yi);
      } else {
        vt.insert(vt.end(), v.begin(), v.end());
        v.assign(1, yi);
        rho = yi - 1.0;
      }
    }
  }
  for (const double yi : vt) {
    if (yi > rho) {
      v.push_back(yi);
      rho += (yi - rho) / static_cast<double>(v.size());
    }
  }
  // Remove elements that fell below the threshold until the set is stable.
  bool changed = true;
  while (changed) {
    changed = false;
    std::size_t count = v.size();
    for (auto it = v.begin(); it != v.end();) {
      if (*it <= rho) {
        --count;
        rho += (rho - *it) / static_cast<double>(count);
        it = v.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
  }
  // Recompute the threshold exactly from the final support.
  double sum = 0.0;
  for (const double yi : v) sum += yi;
  const double tau = (sum - 1.0) / static_cast<double>(v.size());
  return clip_and_normalize(y, tau);
}

Vector project_simplex_sort(const Vector& y) {
  const auto k = y.size();
  if (k == 0) return y;
  std::vector<double> u(y.data(), y.data() + k);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double tau = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const double t = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) tau = t;
  }
  return clip_and_normalize(y, tau);
}

}  // namespace sdqp
