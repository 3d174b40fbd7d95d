#include "helpers.hpp"

#include "sdqp/acdm.hpp"
#include "sdqp/oracle.hpp"

#include <doctest.h>

using namespace sdqp;

namespace {

struct RandomMaster {
  Matrix H;
  Vector h;
};

RandomMaster random_master(Eigen::Index k, Rng& rng, bool full_rank) {
  const Eigen::Index r = full_rank ? k : std::max<Eigen::Index>(1, k / 2);
  Matrix G(k, r);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < r; ++j) G(i, j) = rng.normal();
  }
  Matrix H = G * G.transpose();
  H = (H + H.transpose()) * 0.5;
  return {H, test::random_vector(k, rng)};
}

}  // namespace

TEST_CASE("max feasible step and exact line minimum") {
  Vector ls(3), lt(3);
  ls << 0.5, 0.5, 0.0;
  lt << 0.0, 0.5, 0.5;
  CHECK(*max_feasible_step(ls, lt) == doctest::Approx(1.0));
  lt << -0.5, 1.0, 0.5;
  CHECK(*max_feasible_step(ls, lt) == doctest::Approx(0.5));
  CHECK_FALSE(max_feasible_step(ls, ls).has_value());
  lt << 0.5, 0.6, -0.1;
  CHECK(*max_feasible_step(ls, lt) == 0.0);

  Matrix H = 2.0 * Matrix::Identity(2, 2);
  Vector h = Vector::Zero(2);
  Vector a(2), b(2);
  a << 1, 0;
  b << 0, 1;
  CHECK(exact_line_min(a, b, H, h) == doctest::Approx(0.5));
}

TEST_CASE("conjugation deflates against the set") {
  Rng rng(2);
  const auto m = random_master(6, rng, true);
  DirectionSet D;
  for (int i = 0; i < 4; ++i) {
    const auto c = conjugate_against(test::random_vector(6, rng), D, m.H);
    REQUIRE_FALSE(c.zero);
    D.push(c.d, m.H);
  }
  CHECK(D.conjugacy_error(m.H) <= 1e-10);
  const auto again = conjugate_against(D.directions[1], D, m.H);
  CHECK(again.zero);
}

TEST_CASE("ACDM matches the face-enumeration oracle") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto k = static_cast<Eigen::Index>(1 + trial % 8);
    const auto m = random_master(k, rng, trial % 2 == 0);
    Vector lam0 = Vector::Zero(k);
    lam0(0) = 1.0;
    auto st = master_from_matrices(m.H, m.h, lam0);
    DirectionSet D;
    const auto res = solve_master_acdm(st, D, std::nullopt);
    const Vector ref = oracle_simplex_qp(m.H, m.h);
    const double f_acdm = 0.5 * res.lambda.dot(m.H * res.lambda) + m.h.dot(res.lambda);
    const double f_ref = 0.5 * ref.dot(m.H * ref) + m.h.dot(ref);
    CHECK(f_acdm <= f_ref + 1e-10 * (1.0 + std::abs(f_ref)));
    CHECK(res.lambda.minCoeff() >= 0.0);
    CHECK(std::abs(res.lambda.sum() - 1.0) <= 1e-12);
    CHECK(res.kkt_residual <= 1e-8);
  }
}

TEST_CASE("interior optimum reached in at most k conjugate steps") {
  // H = 2I, h = 0: the optimum is the barycentre, interior to the simplex
  for (Eigen::Index k : {2, 3, 5, 8, 12}) {
    Vector lam0 = Vector::Constant(k, 1.0 / static_cast<double>(k));
    lam0(0) += 0.2;
    lam0 /= lam0.sum();
    auto st = master_from_matrices(2.0 * Matrix::Identity(k, k), Vector::Zero(k), lam0);
    DirectionSet D;
    const auto res = solve_master_acdm(st, D, std::nullopt);
    CHECK(res.boundary_hits == 0);
    CHECK(res.conjugate_steps <= k);
    CHECK((res.lambda - Vector::Constant(k, 1.0 / static_cast<double>(k))).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("vertex optimum and warm-started new direction") {
  Vector h(3);
  h << -10.0, 0.0, 0.0;
  auto st = master_from_matrices(Matrix::Identity(3, 3), h, Vector::Constant(3, 1.0 / 3.0));
  DirectionSet D;
  const auto res = solve_master_acdm(st, D, std::nullopt);
  CHECK(res.lambda(0) == 1.0);
  CHECK(res.dropped == std::vector<Eigen::Index>{1, 2});
}
