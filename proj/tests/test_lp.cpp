#include "helpers.hpp"

#include "sdqp/lp.hpp"

#include <doctest.h>

#include <algorithm>
#include <limits>

using namespace sdqp;

namespace {

/// Brute-force LP optimum: every basic solution of [A −S] (x, s) = b with the
/// nonbasic x at a bound and nonbasic slacks at zero. Box-bounded x only.
double enumerate_lp(const LpProblem& lp) {
  const auto m = lp.rows();
  const auto n = lp.cols();
  const auto total = n + m;
  Matrix Ext = Matrix::Zero(m, total);
  Ext.leftCols(n) = lp.A;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (lp.sense[static_cast<std::size_t>(i)] == RowSense::greater_equal) Ext(i, n + i) = -1.0;
  }
  double best = std::numeric_limits<double>::infinity();
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = i;
  while (true) {
    Matrix Bm(m, m);
    for (Eigen::Index i = 0; i < m; ++i) Bm.col(i) = Ext.col(basis[static_cast<std::size_t>(i)]);
    Eigen::FullPivLU<Matrix> lu(Bm);
    if (lu.isInvertible()) {
      std::vector<Eigen::Index> nonbasic_x;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (std::find(basis.begin(), basis.end(), j) == basis.end()) nonbasic_x.push_back(j);
      }
      const auto nb = nonbasic_x.size();
      for (std::uint64_t mask = 0; mask < (1ULL << nb); ++mask) {
        Vector z = Vector::Zero(total);
        for (std::size_t q = 0; q < nb; ++q) {
          const auto j = nonbasic_x[q];
          z(j) = (mask >> q) & 1ULL ? lp.upper(j) : lp.lower(j);
        }
        const Vector zb = lu.solve(lp.b - Ext * z);
        bool ok = true;
        for (Eigen::Index i = 0; i < m && ok; ++i) {
          const auto j = basis[static_cast<std::size_t>(i)];
          if (j < n) {
            ok = zb(i) >= lp.lower(j) - 1e-9 && zb(i) <= lp.upper(j) + 1e-9;
          } else {
            ok = zb(i) >= -1e-9 && lp.sense[static_cast<std::size_t>(j - n)] == RowSense::greater_equal;
          }
          z(j) = zb(i);
        }
        if (ok) best = std::min(best, lp.cost.dot(z.head(n)));
      }
    }
    Eigen::Index i = m - 1;
    while (i >= 0 && basis[static_cast<std::size_t>(i)] == total - m + i) --i;
    if (i < 0) break;
    ++basis[static_cast<std::size_t>(i)];
    for (Eigen::Index j = i + 1; j < m; ++j) basis[static_cast<std::size_t>(j)] = basis[static_cast<std::size_t>(j - 1)] + 1;
  }
  return best;
}

void check_optimality(const LpProblem& lp, const LpResult& r) {
  const double tol = 1e-8;
  const auto m = lp.rows();
  for (Eigen::Index i = 0; i < m; ++i) {
    const double act = lp.A.row(i).dot(r.x) - lp.b(i);
    if (lp.sense[static_cast<std::size_t>(i)] == RowSense::equal) {
      CHECK(std::abs(act) <= tol);
    } else {
      CHECK(act >= -tol);
      CHECK(r.duals(i) >= -1e-9);
      CHECK(std::abs(r.duals(i) * act) <= tol);
    }
  }
  const Vector d = lp.cost - lp.A.transpose() * r.duals;
  for (Eigen::Index j = 0; j < lp.cols(); ++j) {
    CHECK(r.x(j) >= lp.lower(j) - tol);
    CHECK(r.x(j) <= lp.upper(j) + tol);
    CHECK(std::abs(d(j) - r.reduced_costs(j)) <= 1e-8 * (1.0 + std::abs(d(j))));
    const bool at_lower = std::abs(r.x(j) - lp.lower(j)) <= tol;
    const bool at_upper = std::abs(r.x(j) - lp.upper(j)) <= tol;
    if (!at_lower) CHECK(d(j) <= 1e-9 * (1.0 + lp.cost.cwiseAbs().maxCoeff()));
    if (!at_upper) CHECK(d(j) >= -1e-9 * (1.0 + lp.cost.cwiseAbs().maxCoeff()));
  }
  CHECK(std::abs(r.objective - lp.cost.dot(r.x)) <= 1e-9 * (1.0 + std::abs(r.objective)));
}

}  // namespace

TEST_CASE("unit simplex and box") {
  const auto inst = test::simplex_instance(RowMatrix::Identity(2, 2), Vector::Zero(2));
  Vector g(2);
  g << 1.0, 0.0;
  const auto r = lp_solve(make_lp(inst, g));
  CHECK(r.x(0) == doctest::Approx(0.0));
  CHECK(r.x(1) == doctest::Approx(1.0));
  CHECK(r.objective == doctest::Approx(0.0));

  QpInstance box;
  box.Q = RowMatrix::Zero(6, 6);
  box.c = Vector::Zero(6);
  box.lower = Vector::Zero(6);
  box.upper = Vector::Ones(6);
  box.finalize();
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    const Vector c = test::random_vector(6, rng);
    const auto rb = lp_solve(make_lp(box, c));
    for (Eigen::Index j = 0; j < 6; ++j) CHECK(rb.x(j) == (c(j) > 0 ? 0.0 : 1.0));
  }
}

TEST_CASE("random small LPs match basic-solution enumeration") {
  Rng rng(12);
  for (int t = 0; t < 60; ++t) {
    const auto n = static_cast<Eigen::Index>(2 + t % 9);
    const auto m = std::min<Eigen::Index>(static_cast<Eigen::Index>(1 + t % 4), n - 1);
    const auto cls = kSyntheticClasses[t % 6];
    const auto g = generate_synthetic(cls == InstanceClass::S || cls == InstanceClass::S_b || cls == InstanceClass::S_rb
                                          ? InstanceClass::R
                                          : cls,
                                      n, m, 500 + t);
    const Vector cost = test::random_vector(n, rng);
    const auto lp = make_lp(g.inst, cost);
    const auto r = lp_solve(lp);
    const double ref = enumerate_lp(lp);
    CHECK(std::abs(r.objective - ref) <= 1e-9 * (1.0 + std::abs(ref)));
    check_optimality(lp, r);
  }
}

TEST_CASE("infeasible and unbounded LPs raise") {
  auto inst = test::simplex_instance(RowMatrix::Identity(2, 2), Vector::Zero(2));
  inst.ineq.push_back({Vector::Ones(2), 3.0});
  CHECK_THROWS_AS(lp_solve(make_lp(inst, Vector::Ones(2))), LpError);
  try {
    lp_solve(make_lp(inst, Vector::Ones(2)));
  } catch (const LpError& e) {
    CHECK(e.kind() == LpError::Kind::infeasible);
  }
  QpInstance free;
  free.Q = RowMatrix::Zero(2, 2);
  free.c = Vector::Zero(2);
  free.lower = Vector::Zero(2);
  free.finalize();
  try {
    lp_solve(make_lp(free, -Vector::Ones(2)));
    FAIL("expected unbounded");
  } catch (const LpError& e) {
    CHECK(e.kind() == LpError::Kind::unbounded);
  }
}

TEST_CASE("free variables and equality rows") {
  // min 2 x0 + x1 s.t. x0 + x1 = 1, x0 − x1 ≥ −3, x free
  QpInstance inst;
  inst.Q = RowMatrix::Zero(2, 2);
  inst.c = Vector::Zero(2);
  Vector a(2);
  a << 1, 1;
  inst.eq.push_back({a, 1.0});
  a << 1, -1;
  inst.ineq.push_back({a, -3.0});
  inst.finalize();
  Vector cost(2);
  cost << 2, 1;
  const auto r = lp_solve(make_lp(inst, cost));
  CHECK(r.x(0) == doctest::Approx(-1.0));
  CHECK(r.x(1) == doctest::Approx(2.0));
  // the opposite cost runs off along the equality line
  cost << 1, 2;
  CHECK_THROWS_AS(lp_solve(make_lp(inst, cost)), LpError);
}

TEST_CASE("early stop halts at a vertex under the threshold") {
  const auto g = generate_synthetic(InstanceClass::R_b, 60, 4, 9);
  Rng rng(1);
  const Vector cost = test::random_vector(60, rng);
  const auto lp = make_lp(g.inst, cost);
  const auto full = lp_solve(lp);
  LpOptions opts;
  opts.early_stop_below = full.objective + 0.5 * std::abs(full.objective) + 0.1;
  const auto es = lp_solve(lp, opts);
  CHECK(es.objective <= *opts.early_stop_below + 1e-12);
  CHECK(es.pivots <= full.pivots);
  for (Eigen::Index i = 0; i < lp.rows(); ++i) {
    const double act = lp.A.row(i).dot(es.x) - lp.b(i);
    if (lp.sense[static_cast<std::size_t>(i)] == RowSense::equal) {
      CHECK(std::abs(act) <= 1e-9);
    } else {
      CHECK(act >= -1e-9);
    }
  }
  // a threshold below the optimum cannot trigger: the LP runs to optimality
  opts.early_stop_below = full.objective - 1.0;
  const auto no = lp_solve(lp, opts);
  CHECK(no.status == LpStatus::optimal);
  CHECK(no.objective == doctest::Approx(full.objective).epsilon(1e-10));
}

TEST_CASE("sifting agrees with the full solve") {
  Rng rng(21);
  for (int t = 0; t < 30; ++t) {
    const auto n = static_cast<Eigen::Index>(50 + 40 * t);
    const auto m = static_cast<Eigen::Index>(1 + t % 10);
    const auto g = generate_synthetic(kSyntheticClasses[t % 6], n, m, 900 + t);
    const Vector cost = test::random_vector(n, rng);
    const auto lp = make_lp(g.inst, cost);
    const auto full = lp_solve(lp);
    SiftingOptions sift;
    sift.batch = 5;
    for (Eigen::Index j = 0; j < 3; ++j) sift.initial_columns.push_back(j);
    const auto sr = sifting_solve(lp, sift);
    CHECK(std::abs(sr.objective - full.objective) <= 1e-8 * (1.0 + std::abs(full.objective)));
    CHECK(sr.sifting_rounds >= 1);
    check_optimality(lp, sr);
  }
}

TEST_CASE("sifting over the full column set needs a single pricing round") {
  const auto g = generate_synthetic(InstanceClass::R_rb, 300, 3, 4);
  Rng rng(2);
  const Vector cost = test::random_vector(300, rng);
  const auto lp = make_lp(g.inst, cost);
  const auto full = lp_solve(lp);
  SiftingOptions sift;
  for (Eigen::Index j = 0; j < 300; ++j) sift.initial_columns.push_back(j);
  const auto sr = sifting_solve(lp, sift);
  CHECK(sr.sifting_rounds == 1);
  CHECK(sr.working_set_size == 300);
  CHECK(sr.objective == doctest::Approx(full.objective).epsilon(1e-10));
}
