#include "helpers.hpp"

#include "sdqp/bench.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace sdqp;
namespace fs = std::filesystem;

namespace {

BenchRecord rec(const std::string& inst, const std::string& cfg, double t, const std::string& status = "optimal") {
  BenchRecord r;
  r.instance = inst;
  r.config = cfg;
  r.wall_time = t;
  r.status = status;
  return r;
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("sdqp_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

class SeedEnv {
 public:
  explicit SeedEnv(const char* value) {
    if (value) {
      setenv("SDQP_SEED", value, 1);
    } else {
      unsetenv("SDQP_SEED");
    }
  }
  ~SeedEnv() { unsetenv("SDQP_SEED"); }
};

}  // namespace

TEST_CASE("results CSV round-trips") {
  BenchRecord a = rec("S_n10_m2_s1", "acdm/Sif-CE", 0.125);
  a.cls = "S";
  a.n = 10;
  a.m = 3;
  a.f = -1.0 / 3.0;
  a.er = 2.5e-12;
  a.ei = 1e-9;
  a.iterations = 17;
  a.master_dim = 5;
  a.t_master = 0.1;
  BenchRecord b = rec("odd, \"name\"", "fgpm/D", 3.0, "error");
  b.message = "bad, very \"bad\"";
  std::stringstream ss;
  write_bench_csv(ss, {a, b});
  const auto back = read_bench_csv(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[0].instance == a.instance);
  CHECK(back[0].f == a.f);
  CHECK(back[0].er == a.er);
  CHECK(back[0].iterations == 17);
  CHECK(back[0].t_master == a.t_master);
  CHECK(back[1].instance == b.instance);
  CHECK(back[1].message == b.message);
  CHECK(std::isnan(back[1].er));
  CHECK(back[1].status == "error");

  std::stringstream bad("instance,oops\n");
  CHECK_THROWS_AS(read_bench_csv(bad), ParseError);
}

TEST_CASE("relative error and exit codes") {
  CHECK(relative_error(1.5, 1.0) == doctest::Approx(0.5));
  CHECK(relative_error(0.1, 0.0) == doctest::Approx(0.1));
  CHECK(relative_error(-2.2, -2.0) == doctest::Approx(0.1));
  CHECK(bench_exit_code({rec("a", "x", 1)}) == 0);
  CHECK(bench_exit_code({rec("a", "x", 1), rec("b", "x", 1, "time_limit")}) == 2);
  CHECK(bench_exit_code({rec("a", "x", 1, "iter_limit"), rec("b", "x", 1, "error")}) == 1);
}

TEST_CASE("hand-computed performance profile") {
  const std::vector<BenchRecord> rs{rec("p1", "A", 1.0), rec("p1", "B", 2.0), rec("p2", "A", 2.0),
                                    rec("p2", "B", 1.0)};
  const auto curves = perf_profile(rs, {"A", "B"});
  REQUIRE(curves.size() == 2);
  for (const auto& c : curves) {
    CHECK(c.rho(1.0) == doctest::Approx(0.5));
    CHECK(c.rho(1.999) == doctest::Approx(0.5));
    CHECK(c.rho(2.0) == doctest::Approx(1.0));
    CHECK(c.rho(0.5) == doctest::Approx(0.0));
  }
  // a solver that never succeeds stays at zero
  const std::vector<BenchRecord> fails{rec("p1", "A", 1.0), rec("p1", "C", 0.5, "time_limit"),
                                       rec("p2", "A", 2.0), rec("p2", "C", 0.1, "error")};
  const auto f = perf_profile(fails, {"A", "C"});
  CHECK(f[0].rho(1.0) == doctest::Approx(1.0));
  for (double tau : {1.0, 10.0, 1e6}) CHECK(f[1].rho(tau) == 0.0);

  CHECK_THROWS(perf_profile(rs, {"A"}));
  CHECK_THROWS(perf_profile({rec("p1", "A", 1), rec("p2", "B", 1)}, {"A", "B"}));

  // only shared instances count
  auto extra = rs;
  extra.push_back(rec("p3", "A", 1.0));
  CHECK(perf_profile(extra, {"A", "B"})[0].ratios.size() == 2);

  std::stringstream csv, dat;
  write_profile_csv(csv, curves, 4.0);
  write_profile_dat(dat, curves, 4.0);
  CHECK(csv.str().rfind("solver,tau,rho\n", 0) == 0);
  CHECK(csv.str().find("A,2,1\n") != std::string::npos);
  CHECK(dat.str().find("# tau A B") == 0);
}

TEST_CASE("trace interpolation and decay curves") {
  RunTrace a{"p", "fast", "optimal", 2.0, {{0.5, 10.0}, {1.0, 4.0}, {2.0, 2.0}}};
  CHECK(trace_value_at(a, 0.0) == 10.0);
  CHECK(trace_value_at(a, 0.75) == 10.0);
  CHECK(trace_value_at(a, 1.0) == 4.0);
  CHECK(trace_value_at(a, 100.0) == 2.0);

  RunTrace ref{"p", "ref", "optimal", 4.0, {{1.0, 8.0}, {4.0, 2.0}}};
  RunTrace short_ref{"q", "ref", "optimal", 0.01, {{0.01, 1.0}}};
  RunTrace q{"q", "fast", "optimal", 0.01, {{0.01, 1.0}}};
  const auto curves = decay_trace({a, ref, short_ref, q}, "ref", 0.1, 2.0, 4);
  REQUIRE(curves.size() == 2);
  const auto& fast = curves[0].solver == "fast" ? curves[0] : curves[1];
  const auto& refc = curves[0].solver == "ref" ? curves[0] : curves[1];
  // τ grid 0, 0.5, 1, 1.5, 2 against T_ref = 4 and f_ref = 2
  REQUIRE(fast.tau.size() == 5);
  CHECK(fast.tau[1] == doctest::Approx(0.5));
  CHECK(fast.ratio[0] == doctest::Approx(5.0));
  CHECK(fast.ratio[1] == doctest::Approx(1.0));  // t = 2
  CHECK(fast.count[1] == 1);                     // q filtered by min ref time
  CHECK(refc.ratio[0] == doctest::Approx(4.0));
  CHECK(refc.ratio[2] == doctest::Approx(1.0));
  CHECK_THROWS(decay_trace({a}, "ref"));

  std::stringstream out;
  write_decay_csv(out, curves);
  CHECK(out.str().rfind("solver,tau,ratio,instances\n", 0) == 0);
}

TEST_CASE("manifest parsing and the seed override") {
  const std::string text = R"({"instances": ["a.qp", {"path": "/abs/b.qp", "class": "S-b"}],
    "configs": ["acdm/Sif-CE", "fgpm/D"], "tol": 1e-7, "time_limit": 5, "seed": 9,
    "trace_dir": "tr"})";
  {
    SeedEnv env(nullptr);
    const auto m = parse_manifest(text, "/base");
    REQUIRE(m.instances.size() == 2);
    CHECK(m.instances[0].path == fs::path("/base/a.qp"));
    CHECK(m.instances[1].path == fs::path("/abs/b.qp"));
    CHECK(m.instances[1].cls == "S-b");
    CHECK(m.configs == std::vector<std::string>{"acdm/Sif-CE", "fgpm/D"});
    CHECK(m.tol == 1e-7);
    CHECK(m.time_limit == 5.0);
    CHECK(m.seed == 9);
    CHECK(m.trace_dir == fs::path("/base/tr"));
    CHECK(m.reference == "auto");
  }
  {
    SeedEnv env("1234");
    CHECK(parse_manifest(text, "/base").seed == 1234);
    CHECK(effective_seed(5) == 1234);
  }
  {
    SeedEnv env("x1");
    CHECK_THROWS(effective_seed(5));
  }
  CHECK_THROWS(parse_manifest(R"({"instances": [], "configs": ["acdm/Q"]})"));
}

TEST_CASE("bench run writes records, references and traces") {
  SeedEnv env(nullptr);
  const auto dir = scratch_dir("bench");
  const auto g1 = generate_synthetic(InstanceClass::R_b, 12, 2, 1);
  const auto g2 = generate_synthetic(InstanceClass::S_rb, 14, 2, 2);
  write_instance(g1.inst, dir / "one.qp");
  write_instance(g2.inst, dir / "two.qp");
  std::ofstream(dir / "m.json") << R"({"instances": ["one.qp", "two.qp", "missing.qp"],
    "configs": ["acdm/D", "fgpm/Sif-CE"], "trace_dir": "traces"})";
  const auto m = load_manifest(dir / "m.json");
  const auto rs = run_bench(m, 2);
  REQUIRE(rs.size() == 6);
  CHECK(rs[0].instance == "one");
  CHECK(rs[1].config == "fgpm/Sif-CE");
  CHECK(rs[2].instance == "two");
  for (int i = 0; i < 4; ++i) {
    CHECK(rs[static_cast<std::size_t>(i)].solved());
    CHECK(rs[static_cast<std::size_t>(i)].er <= 1e-5);
    CHECK(rs[static_cast<std::size_t>(i)].n > 0);
  }
  CHECK(rs[4].status == "error");
  CHECK(rs[4].instance == "missing");
  CHECK(bench_exit_code(rs) == 1);
  const auto traces = read_trace_dir(dir / "traces");
  CHECK(traces.size() == 4);
  for (const auto& t : traces) {
    CHECK_FALSE(t.points.empty());
    CHECK(t.status == "optimal");
  }
  fs::remove_all(dir);
}
