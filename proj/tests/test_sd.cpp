#include "helpers.hpp"

#include "sdqp/oracle.hpp"
#include "sdqp/sd.hpp"

#include <doctest.h>

using namespace sdqp;

namespace {

SdConfig config(MasterKind master, PricingConfig pricing) {
  SdConfig cfg;
  cfg.master = master;
  cfg.pricing = pricing;
  cfg.max_iters = 5000;
  return cfg;
}

}  // namespace

TEST_CASE("config labels round-trip") {
  const std::vector<std::string> expected{"D", "E", "C", "CE", "Sif", "Sif-E", "Sif-C", "Sif-CE"};
  const auto all = PricingConfig::all();
  REQUIRE(all.size() == expected.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    CHECK(all[i].label() == expected[i]);
    const auto back = PricingConfig::parse(expected[i]);
    CHECK(back.label() == expected[i]);
  }
  CHECK(SdConfig::from_label("fgpm/Sif-CE").label() == "fgpm/Sif-CE");
  CHECK_THROWS(SdConfig::from_label("acdm"));
  CHECK_THROWS(PricingConfig::parse("Sif-"));
  CHECK_THROWS(PricingConfig::parse("X"));
  CHECK_THROWS(parse_master("newton"));
}

TEST_CASE("linear objective stops after the first pricing") {
  Rng rng(8);
  const auto inst = test::simplex_instance(RowMatrix::Zero(5, 5), test::random_vector(5, rng));
  for (const auto& p : PricingConfig::all()) {
    const auto res = sd_solve(inst, config(MasterKind::acdm, p));
    CHECK(res.status == SdStatus::optimal);
    CHECK(res.trace.size() <= 2);
    CHECK(res.f == doctest::Approx(inst.c.minCoeff()));
  }
}

TEST_CASE("initial vertex minimizes the linear term") {
  const auto g = generate_synthetic(InstanceClass::R_b, 40, 3, 2);
  SdSolver solver(g.inst, config(MasterKind::acdm, {}));
  solver.initialize();
  REQUIRE(solver.state().size() == 1);
  const Vector x0 = solver.state().point();
  const auto lp = lp_solve(make_lp(g.inst, g.inst.c));
  CHECK(g.inst.c.dot(x0) == doctest::Approx(lp.objective).epsilon(1e-12));
}

TEST_CASE("box-only problem with positive cost sits at the lower bound") {
  QpInstance inst;
  Rng rng(6);
  inst.Q = test::random_psd(6, 6, rng);
  inst.c = test::random_vector(6, rng, 0.5, 2.0);
  inst.lower = Vector::Zero(6);
  inst.upper = Vector::Ones(6);
  inst.finalize();
  for (auto m : {MasterKind::acdm, MasterKind::fgpm}) {
    const auto res = sd_solve(inst, config(m, {}));
    CHECK(res.status == SdStatus::optimal);
    CHECK(res.x.cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(res.iterations == 0);
  }
}

TEST_CASE("two anti-correlated assets split evenly") {
  TimeSeriesPanel panel;
  panel.values.resize(2, 4);
  panel.values << 0.02, 0.0, 0.02, 0.0,  //
      0.0, 0.02, 0.0, 0.02;
  const auto inst = build_portfolio(panel, 0.01);
  for (auto m : {MasterKind::acdm, MasterKind::fgpm}) {
    for (const auto& p : PricingConfig::all()) {
      const auto res = sd_solve(inst, config(m, p));
      CHECK(res.status == SdStatus::optimal);
      CHECK(res.x(0) == doctest::Approx(0.5).epsilon(1e-6));
      CHECK(res.x(1) == doctest::Approx(0.5).epsilon(1e-6));
    }
  }
}

TEST_CASE("SD matches the oracle with strictly decreasing iterates") {
  for (int t = 0; t < 18; ++t) {
    const auto g = t % 6 == 5 ? generate_portfolio(12 + t, 0.006, 300 + t)
                              : generate_synthetic(kSyntheticClasses[t % 6], 10 + t, 1 + t % 4, 300 + t);
    const auto ref = oracle_solve_qp(g.inst);
    for (auto m : {MasterKind::acdm, MasterKind::fgpm, MasterKind::oracle_master}) {
      for (const auto& p : PricingConfig::all()) {
        auto cfg = config(m, p);
        cfg.record_vertices = true;
        SdSolver solver(g.inst, cfg);
        int cut_violations = 0;
        solver.set_observer([&](const SdObserverView& v) {
          if (v.record.pricing_status == PricingStatus::early_stopped) {
            CHECK(v.record.pricing_value <= -v.record.early_eps);
          }
          if (v.cuts.size() > 0 && v.cuts.min_slack(ref.x) < -1e-8) ++cut_violations;
        });
        const auto res = solver.solve();
        INFO(g.inst.name, " ", cfg.label());
        CHECK(res.status == SdStatus::optimal);
        const double er = std::abs(res.f - ref.objective) / std::max(1.0, std::abs(ref.objective));
        CHECK(er <= (m == MasterKind::fgpm ? 1e-5 : 1e-6));
        CHECK(max_violation(g.inst, res.x) <= 1e-8);
        CHECK(cut_violations == 0);
        for (std::size_t i = 1; i < res.trace.size(); ++i) {
          CHECK(res.trace[i].f < res.trace[i - 1].f);
        }
        CHECK(res.final_pricing_value >= -cfg.tol_sd * (1.0 + std::abs(res.f)));
        const auto& last = res.trace.back();
        CHECK(last.master_dim == res.master_dim);
        CHECK(res.times.total >= res.times.master + res.times.pricing - 1e-9);
      }
    }
  }
}

TEST_CASE("zero-weight vertices are dropped") {
  const auto g = generate_synthetic(InstanceClass::S_b, 60, 3, 17);
  auto cfg = config(MasterKind::acdm, {});
  cfg.record_vertices = true;
  SdSolver solver(g.inst, cfg);
  long added = 0;
  solver.set_observer([&](const SdObserverView& v) {
    if (v.record.vertex.size() > 0) ++added;
    CHECK((v.state.lambda().array() > cfg.drop_tol).all());
    CHECK(v.state.lambda().sum() == doctest::Approx(1.0).epsilon(1e-12));
  });
  const auto res = solver.solve();
  CHECK(res.status == SdStatus::optimal);
  CHECK(res.master_dim <= added + 1);
}

TEST_CASE("limits are reported") {
  const auto g = generate_synthetic(InstanceClass::R, 200, 10, 3);
  auto cfg = config(MasterKind::acdm, {});
  cfg.max_iters = 2;
  const auto res = sd_solve(g.inst, cfg);
  CHECK(res.status == SdStatus::iter_limit);
  CHECK(res.iterations == 2);
  cfg.max_iters = 100000;
  cfg.time_limit_s = 0.0;
  CHECK(sd_solve(g.inst, cfg).status == SdStatus::time_limit);
}

TEST_CASE("extra initial vertices are distinct and feasible") {
  const auto g = generate_synthetic(InstanceClass::R_rb, 30, 2, 4);
  auto cfg = config(MasterKind::acdm, {});
  cfg.initial_vertices = 4;
  SdSolver solver(g.inst, cfg);
  solver.initialize();
  const auto V = solver.state().vertices();
  CHECK(V.size() >= 2);
  for (std::size_t i = 0; i < V.size(); ++i) {
    CHECK(max_violation(g.inst, V[i]) <= 1e-9);
    for (std::size_t j = 0; j < i; ++j) CHECK((V[i] - V[j]).cwiseAbs().maxCoeff() > 1e-10);
  }
  const auto res = solver.solve();
  CHECK(res.initial_vertex_count == static_cast<int>(V.size()));
}
