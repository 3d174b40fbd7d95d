#include "helpers.hpp"

#include <doctest.h>

#include <filesystem>

using namespace sdqp;

namespace {

QpInstance two_by_two() {
  QpInstance inst;
  inst.Q.resize(2, 2);
  inst.Q << 2, 1, 1, 2;
  inst.c = Vector(2);
  inst.c << -1, 0;
  inst.finalize();
  return inst;
}

}  // namespace

TEST_CASE("objective and gradient on hand examples") {
  QpInstance id;
  id.Q = RowMatrix::Identity(2, 2);
  id.c = Vector::Zero(2);
  id.finalize();
  CHECK(eval_objective(id, Vector::Unit(2, 0)) == 1.0);
  CHECK(eval_gradient(id, Vector::Unit(2, 0)) == Vector::Unit(2, 0) * 2.0);

  QpInstance lin;
  lin.Q = RowMatrix::Zero(2, 2);
  lin.c = Vector(2);
  lin.c << 1, 2;
  lin.finalize();
  Vector x(2);
  x << 3, 4;
  CHECK(eval_objective(lin, x) == 11.0);
  CHECK(eval_gradient(lin, x) == lin.c);

  const auto inst = two_by_two();
  const Vector ones = Vector::Ones(2);
  CHECK(eval_objective(inst, ones) == 5.0);
  Vector g(2);
  g << 5, 6;
  CHECK(eval_gradient(inst, ones) == g);
  CHECK_THROWS_AS(eval_objective(inst, Vector::Ones(3)), DimensionError);
}

TEST_CASE("gradient matches central differences and convexity holds") {
  Rng rng(11);
  for (int probe = 0; probe < 120; ++probe) {
    const auto n = static_cast<Eigen::Index>(1 + probe % 50);
    QpInstance inst;
    inst.Q = test::random_psd(n, std::max<Eigen::Index>(1, n / 2), rng);
    inst.c = test::random_vector(n, rng);
    inst.finalize();
    const Vector x = test::random_vector(n, rng);
    const Vector y = test::random_vector(n, rng);
    const Vector g = eval_gradient(inst, x);
    const double h = 1e-5;
    Vector fd(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      Vector xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      fd(j) = (eval_objective(inst, xp) - eval_objective(inst, xm)) / (2 * h);
    }
    CHECK((fd - g).norm() <= 1e-5 * std::max(1.0, g.norm()));
    CHECK(eval_objective(inst, y) >= eval_objective(inst, x) + g.dot(y - x) - 1e-10);
    const auto ev = evaluate(inst, x);
    CHECK(ev.value == doctest::Approx(eval_objective(inst, x)).epsilon(1e-14));
  }
}

TEST_CASE("validation flags") {
  const auto ok = test::simplex_instance(RowMatrix::Identity(3, 3), Vector::Zero(3));
  CHECK(validate(ok).ok());

  QpInstance unb;
  unb.Q = RowMatrix::Identity(2, 2);
  unb.c = Vector::Zero(2);
  unb.lower = Vector::Zero(2);
  unb.finalize();
  const auto r1 = validate(unb);
  CHECK(r1.unbounded);
  CHECK_FALSE(r1.ok());

  auto indef = ok;
  indef.Q(0, 0) = -1.0;
  const auto r2 = validate(indef);
  CHECK(r2.indefinite);

  auto infeasible = ok;
  infeasible.ineq.push_back({Vector::Ones(3), 2.0});
  CHECK(validate(infeasible).infeasible);

  auto asym = ok;
  asym.Q(0, 1) = 0.5;
  CHECK(validate(asym).asymmetric);
}

TEST_CASE("file round trip is byte identical") {
  const auto dir = std::filesystem::temp_directory_path() / "sdqp_test_problem";
  std::filesystem::create_directories(dir);
  for (auto cls : kSyntheticClasses) {
    const auto g = generate_synthetic(cls, 12, 3, 5);
    const auto p1 = dir / "a.qp";
    write_instance(g.inst, p1);
    const auto back = read_instance(p1);
    CHECK(back.Q == g.inst.Q);
    CHECK(back.c == g.inst.c);
    CHECK(format_instance(back) == format_instance(g.inst));
  }
  const auto pg = generate_portfolio(6, 0.006, 3);
  CHECK(format_instance(parse_instance(format_instance(pg.inst))) == format_instance(pg.inst));
}

TEST_CASE("parser counts and errors") {
  const std::string text =
      "QPTXT1 n 2 eq 1 ineq 0 bounds 0\n"
      "1 0\n0 1\n"
      "0 0\n"
      "1 1 1\n";
  const auto inst = parse_instance(text);
  CHECK(inst.n() == 2);
  CHECK(inst.eq.size() == 1);
  CHECK(inst.ineq.empty());
  CHECK(inst.eq[0].b == 1.0);

  const std::string truncated = "QPTXT1 n 3 eq 0 ineq 0 bounds 0\n1 0 0\n0 1 0\n";
  try {
    parse_instance(truncated);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("Q row 3") != std::string::npos);
    CHECK(e.line() == 4);  // the missing row was due on line 4
  }
  CHECK_THROWS_AS(parse_instance("QPTXT2 n 1 eq 0 ineq 0 bounds 0\n1\n1\n"), ParseError);
  CHECK_THROWS_AS(parse_instance("QPTXT1 n 2 eq 0 ineq 0 bounds 0\n1 2\n3 4\n0 0\n"), ParseError);
  CHECK_THROWS_AS(parse_instance("QPTXT1 n 2 eq 0 ineq 0 bounds 0\n1 0\n0 1 5\n0 0\n"), ParseError);
}
