#include "sdqp/oracle.hpp"

#include "sdqp/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sdqp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// All constraints as rows: equalities, then ≥ rows (general, then bounds).
struct RowForm {
  Matrix Aeq;
  Vector beq;
  Matrix Ain;
  Vector bin;
};

RowForm row_form(const QpInstance& inst) {
  const auto n = inst.n();
  RowForm rf;
  rf.Aeq.resize(static_cast<Eigen::Index>(inst.eq.size()), n);
  rf.beq.resize(rf.Aeq.rows());
  for (std::size_t i = 0; i < inst.eq.size(); ++i) {
    rf.Aeq.row(static_cast<Eigen::Index>(i)) = inst.eq[i].a.transpose();
    rf.beq(static_cast<Eigen::Index>(i)) = inst.eq[i].b;
  }
  std::vector<std::pair<Vector, double>> rows;
  for (const auto& r : inst.ineq) rows.emplace_back(r.a, r.b);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::isfinite(inst.lower_bound(j))) {
      Vector e = Vector::Zero(n);
      e(j) = 1.0;
      rows.emplace_back(e, inst.lower_bound(j));
    }
    if (std::isfinite(inst.upper_bound(j))) {
      Vector e = Vector::Zero(n);
      e(j) = -1.0;
      rows.emplace_back(e, -inst.upper_bound(j));
    }
  }
  rf.Ain.resize(static_cast<Eigen::Index>(rows.size()), n);
  rf.bin.resize(rf.Ain.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rf.Ain.row(static_cast<Eigen::Index>(i)) = rows[i].first.transpose();
    rf.bin(static_cast<Eigen::Index>(i)) = rows[i].second;
  }
  return rf;
}

double scale_of(const QpInstance& inst, const RowForm& rf) {
  double s = 1.0;
  if (inst.n() > 0) s = std::max(s, inst.Q.cwiseAbs().maxCoeff());
  if (inst.n() > 0) s = std::max(s, inst.c.cwiseAbs().maxCoeff());
  if (rf.Ain.size() > 0) s = std::max(s, rf.Ain.cwiseAbs().maxCoeff());
  if (rf.Aeq.size() > 0) s = std::max(s, rf.Aeq.cwiseAbs().maxCoeff());
  return s;
}

/// Fills the KKT residuals of (x, ν, μ) and returns the certificate.
KktSolution certify(const QpInstance& inst, const RowForm& rf, Vector x, Vector nu, Vector mu) {
  KktSolution s;
  const Vector g = 2.0 * (inst.Q * x) + inst.c;
  Vector r = g;
  if (rf.Aeq.rows() > 0) r -= rf.Aeq.transpose() * nu;
  if (rf.Ain.rows() > 0) r -= rf.Ain.transpose() * mu;
  s.stationarity = r.cwiseAbs().maxCoeff();
  s.primal_infeasibility = 0.0;
  if (rf.Aeq.rows() > 0) s.primal_infeasibility = (rf.Aeq * x - rf.beq).cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < rf.Ain.rows(); ++i) {
    const double slack = rf.Ain.row(i).dot(x) - rf.bin(i);
    s.primal_infeasibility = std::max(s.primal_infeasibility, -slack);
    s.dual_infeasibility = std::max(s.dual_infeasibility, -mu(i));
    s.complementarity = std::max(s.complementarity, std::abs(mu(i) * slack));
    if (mu(i) != 0.0) s.active.push_back(static_cast<std::size_t>(i));
  }
  s.objective = eval_objective(inst, x);
  s.x = std::move(x);
  s.eq_multipliers = std::move(nu);
  s.ineq_multipliers = std::move(mu);
  return s;
}

/// Solves the equality-constrained KKT system for working set W by a
/// minimum-norm solve; false when the system is inconsistent.
bool solve_working_kkt(const QpInstance& inst, const RowForm& rf, const std::vector<Eigen::Index>& W,
                       double tol, Vector& x, Vector& nu, Vector& muW) {
  const auto n = inst.n();
  const auto me = rf.Aeq.rows();
  const auto mw = static_cast<Eigen::Index>(W.size());
  const auto dim = n + me + mw;
  Matrix K = Matrix::Zero(dim, dim);
  Vector rhs(dim);
  K.topLeftCorner(n, n) = 2.0 * Matrix(inst.Q);
  rhs.head(n) = -inst.c;
  for (Eigen::Index i = 0; i < me; ++i) {
    K.block(0, n + i, n, 1) = -rf.Aeq.row(i).transpose();
    K.block(n + i, 0, 1, n) = rf.Aeq.row(i);
    rhs(n + i) = rf.beq(i);
  }
  for (Eigen::Index i = 0; i < mw; ++i) {
    const auto row = W[static_cast<std::size_t>(i)];
    K.block(0, n + me + i, n, 1) = -rf.Ain.row(row).transpose();
    K.block(n + me + i, 0, 1, n) = rf.Ain.row(row);
    rhs(n + me + i) = rf.bin(row);
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(K);
  const Vector sol = cod.solve(rhs);
  const double resid = (K * sol - rhs).cwiseAbs().maxCoeff();
  if (!(resid <= tol * (1.0 + rhs.cwiseAbs().maxCoeff()) * 10.0)) return false;
  x = sol.head(n);
  nu = sol.segment(n, me);
  muW = sol.tail(mw);
  return true;
}

std::uint64_t binom_sum_capped(std::uint64_t p, std::uint64_t kmax, std::uint64_t cap) {
  std::uint64_t total = 0;
  long double term = 1.0L;  // C(p, 0)
  for (std::uint64_t k = 0; k <= std::min(p, kmax); ++k) {
    if (k > 0) term = term * static_cast<long double>(p - k + 1) / static_cast<long double>(k);
    const long double next = static_cast<long double>(total) + term;
    if (next >= static_cast<long double>(cap)) return cap;
    total = static_cast<std::uint64_t>(next + 0.5L);
  }
  return total;
}

KktSolution enumerate(const QpInstance& inst, const RowForm& rf, const OracleOptions& opts) {
  const auto p = rf.Ain.rows();
  const auto n = inst.n();
  const auto kmax = std::min<Eigen::Index>(p, n);
  const double tol = opts.tol * scale_of(inst, rf) * 100.0;
  KktSolution best;
  bool found = false;
  std::vector<Eigen::Index> W;
  // Subsets in increasing cardinality, lexicographic within a size.
  for (Eigen::Index k = 0; k <= kmax; ++k) {
    W.resize(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < k; ++i) W[static_cast<std::size_t>(i)] = i;
    while (true) {
      Vector x, nu, muW;
      if (solve_working_kkt(inst, rf, W, opts.tol, x, nu, muW)) {
        const bool dual_ok = muW.size() == 0 || muW.minCoeff() >= -tol;
        bool primal_ok = dual_ok;
        if (primal_ok && rf.Ain.rows() > 0) primal_ok = (rf.Ain * x - rf.bin).minCoeff() >= -tol;
        if (primal_ok && rf.Aeq.rows() > 0) primal_ok = (rf.Aeq * x - rf.beq).cwiseAbs().maxCoeff() <= tol;
        if (primal_ok) {
          Vector mu = Vector::Zero(p);
          for (std::size_t i = 0; i < W.size(); ++i) mu(W[i]) = std::max(0.0, muW(static_cast<Eigen::Index>(i)));
          KktSolution cand = certify(inst, rf, x, nu, mu);
          const bool better = !found || cand.objective < best.objective - 1e-14 * (1.0 + std::abs(best.objective)) ||
                              (std::abs(cand.objective - best.objective) <= 1e-14 * (1.0 + std::abs(best.objective)) &&
                               cand.x.norm() < best.x.norm());
          if (better) {
            best = std::move(cand);
            found = true;
          }
        }
      }
      // next combination
      Eigen::Index i = k - 1;
      while (i >= 0 && W[static_cast<std::size_t>(i)] == p - k + i) --i;
      if (i < 0) break;
      ++W[static_cast<std::size_t>(i)];
      for (Eigen::Index j = i + 1; j < k; ++j) W[static_cast<std::size_t>(j)] = W[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  if (!found) throw OracleRefused("enumeration found no KKT point (infeasible instance?)");
  best.enumerated = true;
  return best;
}

/// Orthonormal basis of null(A) (A may have zero rows).
Matrix null_space(const Matrix& A, Eigen::Index n) {
  if (A.rows() == 0) return Matrix::Identity(n, n);
  Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double thresh = 1e-12 * std::max<double>(1.0, s.size() > 0 ? s(0) : 0.0) * static_cast<double>(n);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) rank += s(i) > thresh;
  return svd.matrixV().rightCols(n - rank);
}

KktSolution primal_active_set(const QpInstance& inst, const RowForm& rf, const OracleOptions& opts) {
  const auto n = inst.n();
  const auto p = rf.Ain.rows();
  const auto me = rf.Aeq.rows();
  const double scale = scale_of(inst, rf);

  // Feasible start: a vertex of the feasible set.
  Vector x = lp_solve(make_lp(inst, Vector::Zero(n))).x;

  // Linearly independent subset of the active rows, equalities first.
  std::vector<Eigen::Index> W;
  auto working_matrix = [&](const std::vector<Eigen::Index>& set) {
    Matrix A(me + static_cast<Eigen::Index>(set.size()), n);
    if (me > 0) A.topRows(me) = rf.Aeq;
    for (std::size_t i = 0; i < set.size(); ++i) A.row(me + static_cast<Eigen::Index>(i)) = rf.Ain.row(set[i]);
    return A;
  };
  auto rank_of = [&](const Matrix& A) {
    if (A.rows() == 0) return Eigen::Index{0};
    Eigen::FullPivHouseholderQR<Matrix> qr(A);
    qr.setThreshold(1e-10);
    return qr.rank();
  };
  Eigen::Index rank = rank_of(rf.Aeq);
  for (Eigen::Index i = 0; i < p; ++i) {
    if (std::abs(rf.Ain.row(i).dot(x) - rf.bin(i)) > 1e-9 * (1.0 + std::abs(rf.bin(i)))) continue;
    auto trial = W;
    trial.push_back(i);
    const auto r = rank_of(working_matrix(trial));
    if (r > rank) {
      W = std::move(trial);
      rank = r;
    }
  }

  const Matrix G = 2.0 * Matrix(inst.Q);
  const long max_iter = 100 * (n + p + 10);
  for (long it = 0; it < max_iter; ++it) {
    const Matrix A = working_matrix(W);
    const Matrix Z = null_space(A, n);
    const Vector g = G * x + inst.c;
    Vector step = Vector::Zero(n);
    bool unbounded_dir = false;
    if (Z.cols() > 0) {
      const Matrix ZGZ = Z.transpose() * G * Z;
      const Vector zg = Z.transpose() * g;
      Eigen::SelfAdjointEigenSolver<Matrix> es(ZGZ);
      const Vector& ev = es.eigenvalues();
      const Matrix& V = es.eigenvectors();
      const double ev_tol = 1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff());
      // Gradient component in the zero-curvature subspace gives a descent ray.
      Vector flat = Vector::Zero(zg.size());
      Vector curved = Vector::Zero(zg.size());
      for (Eigen::Index i = 0; i < ev.size(); ++i) {
        const double coef = V.col(i).dot(zg);
        if (ev(i) <= ev_tol) {
          flat += coef * V.col(i);
        } else {
          curved -= (coef / ev(i)) * V.col(i);
        }
      }
      if (flat.norm() > 1e-11 * (1.0 + zg.norm())) {
        step = -Z * flat;
        unbounded_dir = true;
      } else {
        step = Z * curved;
      }
    }
    if (step.cwiseAbs().maxCoeff() <= 1e-13 * (1.0 + x.cwiseAbs().maxCoeff())) {
      // Multipliers from g = Aᵀ(ν, μ_W).
      Vector mult = Vector::Zero(A.rows());
      if (A.rows() > 0) mult = A.transpose().colPivHouseholderQr().solve(g);
      Eigen::Index worst = -1;
      double worst_val = -opts.tol * scale;
      for (std::size_t i = 0; i < W.size(); ++i) {
        const double m = mult(me + static_cast<Eigen::Index>(i));
        if (m < worst_val) {
          worst_val = m;
          worst = static_cast<Eigen::Index>(i);
        }
      }
      if (worst < 0) {
        Vector mu = Vector::Zero(p);
        for (std::size_t i = 0; i < W.size(); ++i) mu(W[i]) = std::max(0.0, mult(me + static_cast<Eigen::Index>(i)));
        return certify(inst, rf, x, mult.head(me), mu);
      }
      W.erase(W.begin() + worst);
      continue;
    }
    // Ratio test against rows outside W.
    double alpha = unbounded_dir ? kInf : 1.0;
    Eigen::Index block = -1;
    for (Eigen::Index i = 0; i < p; ++i) {
      if (std::find(W.begin(), W.end(), i) != W.end()) continue;
      const double ap = rf.Ain.row(i).dot(step);
      if (ap >= -1e-14 * step.norm()) continue;
      const double slack = std::max(0.0, rf.Ain.row(i).dot(x) - rf.bin(i));
      const double t = slack / -ap;
      if (t < alpha) {
        alpha = t;
        block = i;
      }
    }
    if (!std::isfinite(alpha)) throw OracleRefused("active-set oracle: unbounded direction");
    x += alpha * step;
    if (block >= 0) W.push_back(block);
  }
  throw OracleRefused("active-set oracle: iteration limit");
}

}  // namespace

std::uint64_t oracle_enumeration_count(const QpInstance& inst) {
  const RowForm rf = row_form(inst);
  return binom_sum_capped(static_cast<std::uint64_t>(rf.Ain.rows()), static_cast<std::uint64_t>(inst.n()),
                          std::numeric_limits<std::uint64_t>::max());
}

KktSolution oracle_solve_qp(const QpInstance& inst, const OracleOptions& opts) {
  const RowForm rf = row_form(inst);
  const auto count = binom_sum_capped(static_cast<std::uint64_t>(rf.Ain.rows()),
                                      static_cast<std::uint64_t>(inst.n()), opts.enumeration_budget + 1);
  if (count <= opts.enumeration_budget) return enumerate(inst, rf, opts);
  if (!opts.allow_active_set) {
    throw OracleRefused("active-set enumeration exceeds the budget of " + std::to_string(opts.enumeration_budget));
  }
  return primal_active_set(inst, rf, opts);
}

Vector oracle_simplex_qp(const Matrix& H, const Vector& h) {
  const auto k = h.size();
  if (k < 1 || k > 8) throw OracleRefused("oracle_simplex_qp handles 1 <= k <= 8");
  Vector best;
  double best_val = kInf;
  const double scale = 1.0 + H.cwiseAbs().maxCoeff() + h.cwiseAbs().maxCoeff();
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    std::vector<Eigen::Index> S;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (mask & (1u << i)) S.push_back(i);
    }
    const auto s = static_cast<Eigen::Index>(S.size());
    // [H_SS  −1; 1ᵀ 0] (λ_S, ν) = (−h_S, 1)
    Matrix K = Matrix::Zero(s + 1, s + 1);
    Vector rhs(s + 1);
    for (Eigen::Index a = 0; a < s; ++a) {
      for (Eigen::Index b = 0; b < s; ++b) K(a, b) = H(S[a], S[b]);
      K(a, s) = -1.0;
      K(s, a) = 1.0;
      rhs(a) = -h(S[a]);
    }
    rhs(s) = 1.0;
    const Vector sol = Eigen::CompleteOrthogonalDecomposition<Matrix>(K).solve(rhs);
    if ((K * sol - rhs).cwiseAbs().maxCoeff() > 1e-10 * scale) continue;
    if (sol.head(s).minCoeff() < -1e-12) continue;
    Vector lambda = Vector::Zero(k);
    for (Eigen::Index a = 0; a < s; ++a) lambda(S[a]) = std::max(0.0, sol(a));
    lambda /= lambda.sum();
    const double val = 0.5 * lambda.dot(H * lambda) + h.dot(lambda);
    if (val < best_val - 1e-15 * scale) {
      best_val = val;
      best = lambda;
    }
  }
  return best;
}

}  // namespace sdqp
