#include "sdqp/acdm.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace sdqp {

namespace {

double matrix_scale(const Matrix& H) {
  return H.size() > 0 ? H.cwiseAbs().maxCoeff() : 0.0;
}

bool degenerate_curvature(double curvature, double d_norm2, double h_scale) {
  return curvature <= 1e-12 * h_scale * d_norm2;
}

}  // namespace

void DirectionSet::clear() {
  directions.clear();
  h_directions.clear();
  curvature.clear();
}

void DirectionSet::push(Vector d, const Matrix& H) {
  Vector hd = H * d;
  curvature.push_back(d.dot(hd));
  directions.push_back(std::move(d));
  h_directions.push_back(std::move(hd));
}

void DirectionSet::pad() {
  for (auto* set : {&directions, &h_directions}) {
    for (auto& v : *set) {
      v.conservativeResize(v.size() + 1);
      v(v.size() - 1) = 0.0;
    }
  }
  // H d gains the new row (H_new,: · d); callers refresh it through push() on rebuild.
  h_directions.clear();
}

void DirectionSet::remove_coordinates(std::span<const Eigen::Index> positions) {
  if (positions.empty()) return;
  for (const auto& d : directions) {
    for (const auto p : positions) {
      if (d(p) != 0.0) valid = false;
    }
  }
  if (!valid) {
    clear();
    return;
  }
  auto compact = [&](Vector& v) {
    Vector out(v.size() - static_cast<Eigen::Index>(positions.size()));
    Eigen::Index w = 0;
    std::size_t next = 0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (next < positions.size() && positions[next] == i) {
        ++next;
        continue;
      }
      out(w++) = v(i);
    }
    v = std::move(out);
  };
  for (auto& d : directions) compact(d);
  for (auto& hd : h_directions) compact(hd);
}

double DirectionSet::conjugacy_error(const Matrix& H) const {
  const double scale = matrix_scale(H);
  double worst = 0.0;
  std::vector<Vector> hd;
  hd.reserve(directions.size());
  for (const auto& d : directions) hd.push_back(H * d);
  for (std::size_t i = 0; i < directions.size(); ++i) {
    const double ci = directions[i].dot(hd[i]);
    if (degenerate_curvature(ci, directions[i].squaredNorm(), scale)) continue;
    for (std::size_t j = i + 1; j < directions.size(); ++j) {
      const double cj = directions[j].dot(hd[j]);
      if (degenerate_curvature(cj, directions[j].squaredNorm(), scale)) continue;
      worst = std::max(worst, std::abs(directions[i].dot(hd[j])) / std::sqrt(ci * cj));
    }
  }
  return worst;
}

Conjugated conjugate_against(const Vector& d_bar, const DirectionSet& D, const Matrix& H) {
  const double scale = matrix_scale(H);
  Vector d = d_bar;
  const bool cached = D.h_directions.size() == D.directions.size();
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t j = 0; j < D.directions.size(); ++j) {
      const Vector& dj = D.directions[j];
      const Vector hdj = cached ? D.h_directions[j] : Vector(H * dj);
      const double cj = cached ? D.curvature[j] : dj.dot(hdj);
      if (degenerate_curvature(cj, dj.squaredNorm(), scale)) continue;
      d -= (d.dot(hdj) / cj) * dj;
    }
  }
  Conjugated out;
  out.zero = d.norm() <= 1e-12 * d_bar.norm();
  out.d = std::move(d);
  return out;
}

std::optional<double> max_feasible_step(const Vector& lambda_s, const Vector& lambda_t) {
  const Vector d = lambda_t - lambda_s;
  if (d.cwiseAbs().maxCoeff() == 0.0) return std::nullopt;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d(i) >= 0.0) continue;
    if (lambda_s(i) <= 0.0) return 0.0;
    worst = std::max(worst, (lambda_s(i) - lambda_t(i)) / lambda_s(i));
  }
  if (worst == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / worst;
}

double exact_line_min(const Vector& lambda_s, const Vector& lambda_p, const Matrix& H, const Vector& h) {
  const Vector p = lambda_p - lambda_s;
  const double slope = (H * lambda_s + h).dot(p);
  const double curvature = p.dot(H * p);
  if (curvature <= 0.0) return slope < 0.0 ? 1.0 : 0.0;
  return std::clamp(-slope / curvature, 0.0, 1.0);
}

AcdmResult solve_master_acdm(const MasterState& state, DirectionSet& D,
                             const std::optional<Vector>& new_direction, const AcdmOptions& opts) {
  const Matrix& H = state.H();
  const Vector& h = state.h();
  const auto k = state.size();
  AcdmResult res;
  Vector lambda = state.lambda();
  if (k == 0) throw std::invalid_argument("empty master");
  if (k == 1) {
    D.clear();
    D.valid = true;
    res.lambda = Vector::Ones(1);
    return res;
  }

  std::vector<char> active(static_cast<std::size_t>(k), 0);
  for (Eigen::Index i = 0; i < k; ++i) {
    active[static_cast<std::size_t>(i)] = lambda(i) > 0.0 || (new_direction && (*new_direction)(i) > 0.0);
  }
  auto active_count = [&] { return std::count(active.begin(), active.end(), 1); };

  // Rebuilding D after a cache pad or a direction set from another basis.
  if (D.h_directions.size() != D.directions.size()) {
    std::vector<Vector> old = std::move(D.directions);
    D.clear();
    for (auto& d : old) D.push(std::move(d), H);
  }

  std::deque<Vector> pending;
  auto restart = [&] {
    D.clear();
    pending.clear();
    for (Eigen::Index j = 0; j < k; ++j) {
      if (!active[static_cast<std::size_t>(j)]) continue;
      Vector d = -lambda;
      d(j) += 1.0;
      pending.push_back(std::move(d));
    }
  };

  if (D.valid && new_direction) {
    pending.push_back(*new_direction);
  } else {
    restart();
  }

  const int reactivation_cap = 10 * static_cast<int>(k) + 50;
  int refinements = 0;
  while (true) {
    while (!pending.empty() && active_count() > 1) {
      const Vector d_bar = std::move(pending.front());
      pending.pop_front();
      auto conj = conjugate_against(d_bar, D, H);
      if (conj.zero) continue;
      Vector d = std::move(conj.d);
      const Vector g = H * lambda + h;
      if (g.dot(d) > 0.0) d = -d;
      const auto alpha = max_feasible_step(lambda, lambda + d);
      if (!alpha || !std::isfinite(*alpha)) continue;
      Vector lambda_p = lambda + *alpha * d;
      const double beta = *alpha > 0.0 ? exact_line_min(lambda, lambda_p, H, h) : 1.0;
      ++res.conjugate_steps;
      if (beta < 1.0) {
        lambda += beta * (lambda_p - lambda);
        D.push(std::move(d), H);
        if (opts.on_step) opts.on_step(D, lambda);
        continue;
      }
      // Boundary of the simplex: drop zero weights, rebuild D on the smaller face.
      ++res.boundary_hits;
      for (Eigen::Index i = 0; i < k; ++i) {
        if (lambda_p(i) <= opts.zero_weight) {
          lambda_p(i) = 0.0;
          active[static_cast<std::size_t>(i)] = 0;
        }
      }
      lambda = lambda_p / lambda_p.sum();
      if (active_count() <= 1) break;
      restart();
    }

    if (active_count() <= 1) {
      Eigen::Index only = 0;
      lambda.maxCoeff(&only);
      lambda.setZero();
      lambda(only) = 1.0;
      std::fill(active.begin(), active.end(), 0);
      active[static_cast<std::size_t>(only)] = 1;
      D.clear();
      pending.clear();
    }

    // Simplex KKT over all coordinates.
    const Vector g = H * lambda + h;
    const double nu = g.dot(lambda);
    const double scale = 1.0 + g.cwiseAbs().maxCoeff();
    double active_dev = 0.0;
    Eigen::Index enter = -1;
    double enter_gap = -opts.kkt_tol * scale;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (active[static_cast<std::size_t>(i)]) {
        active_dev = std::max(active_dev, std::abs(g(i) - nu));
      } else if (g(i) - nu < enter_gap) {
        enter_gap = g(i) - nu;
        enter = i;
      }
    }
    const bool face_optimal = active_dev <= opts.kkt_tol * scale;
    if (!face_optimal && refinements < opts.max_refinements && active_count() > 1) {
      ++refinements;
      restart();
      continue;
    }
    if (enter >= 0 && res.reactivations < reactivation_cap) {
      ++res.reactivations;
      active[static_cast<std::size_t>(enter)] = 1;
      Vector d = -lambda;
      d(enter) += 1.0;
      if (!face_optimal) D.clear();
      if (D.size() == 0 && active_count() > 2) {
        restart();
      } else {
        pending.push_back(std::move(d));
      }
      continue;
    }
    break;
  }

  for (Eigen::Index i = 0; i < k; ++i) {
    if (!active[static_cast<std::size_t>(i)] || lambda(i) < 0.0) lambda(i) = 0.0;
  }
  lambda /= lambda.sum();
  for (Eigen::Index i = 0; i < k; ++i) {
    if (lambda(i) == 0.0) res.dropped.push_back(i);
  }
  D.valid = true;
  res.kkt_residual = simplex_kkt_residual(H, h, lambda);
  res.lambda = std::move(lambda);
  return res;
}

}  // namespace sdqp
