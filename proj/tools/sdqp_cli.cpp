#include "sdqp/bench.hpp"
#include "sdqp/instances.hpp"
#include "sdqp/sd.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace sdqp;

namespace {

/// "42", or a fraction of n written "n/32".
Eigen::Index parse_m(const std::string& text, Eigen::Index n) {
  if (text.rfind("n/", 0) == 0) {
    const long div = std::stol(text.substr(2));
    if (div <= 0) throw std::invalid_argument("bad --m fraction " + text);
    return n / div;
  }
  return std::stol(text);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int exit_for(SdStatus s) { return s == SdStatus::optimal ? 0 : 2; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simplicial decomposition solver and benchmark harness for dense convex QPs"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a generated instance (QPTXT1 plus JSON metadata)");
  std::string g_class, g_m = "2", g_panel;
  long g_n = 100;
  std::uint64_t g_seed = 1;
  std::string g_out = ".";
  double g_mu = 0.008, g_eta = 0.05, g_slb = 0.9, g_sub = 1.1;
  int g_augment = 0;
  bool g_prices = false;
  gen->add_option("--class", g_class, "S, S-b, S-rb, R, R-b, R-rb or portfolio")->required();
  gen->add_option("--n", g_n, "variables (assets for a synthetic portfolio panel)");
  gen->add_option("--m", g_m, "constraint rows, or a fraction such as n/32");
  gen->add_option("--seed", g_seed, "generator seed");
  gen->add_option("--out", g_out, "output directory");
  gen->add_option("--mu", g_mu, "portfolio return threshold");
  gen->add_option("--panel", g_panel, "portfolio: CSV time series instead of a synthetic panel");
  gen->add_flag("--prices", g_prices, "portfolio: panel columns hold prices, convert to returns");
  gen->add_option("--augment", g_augment, "portfolio: clones per asset (1..4)");
  gen->add_option("--eta", g_eta, "portfolio: clone noise half-width");
  gen->add_option("--slb", g_slb, "relaxed budget lower end");
  gen->add_option("--sub", g_sub, "relaxed budget upper end");

  // solve
  auto* solve = app.add_subcommand("solve", "Solve one instance");
  std::string s_instance, s_master = "acdm", s_pricing = "default", s_trace;
  bool s_early = false, s_cuts = false;
  double s_tol = 1e-6, s_time = 1000.0;
  long s_iters = 100000;
  solve->add_option("--instance", s_instance, "QPTXT1 file")->required();
  solve->add_option("--master", s_master, "acdm or fgpm")->check(CLI::IsMember({"acdm", "fgpm"}));
  solve->add_option("--pricing", s_pricing, "default or sifting")->check(CLI::IsMember({"default", "sifting"}));
  solve->add_flag("--early-stop", s_early, "early-stopped pricing");
  solve->add_flag("--cuts", s_cuts, "shrinking cuts");
  solve->add_option("--tol", s_tol, "relative stopping tolerance");
  solve->add_option("--time-limit", s_time, "seconds");
  solve->add_option("--max-iters", s_iters, "iteration limit");
  solve->add_option("--trace", s_trace, "per-iteration trace CSV");

  // bench
  auto* bench = app.add_subcommand("bench", "Run a JSON manifest of instances x configs");
  std::string b_manifest, b_out = "results.csv";
  int b_jobs = 1;
  bench->add_option("--manifest", b_manifest, "manifest JSON")->required();
  bench->add_option("--jobs", b_jobs, "worker threads")->check(CLI::PositiveNumber);
  bench->add_option("--out", b_out, "results CSV");

  // profile
  auto* prof = app.add_subcommand("profile", "Performance profiles from a results CSV");
  std::string p_in, p_out = "profile.csv";
  std::vector<std::string> p_solvers;
  double p_tau = 10.0;
  prof->add_option("--in", p_in, "results CSV")->required();
  prof->add_option("--solvers", p_solvers, "comma-separated config labels")->delimiter(',')->required();
  prof->add_option("--out", p_out, "profile CSV (a gnuplot .dat is written alongside)");
  prof->add_option("--tau-max", p_tau, "largest ratio reported");

  // decay
  auto* decay = app.add_subcommand("decay", "Objective-decay curves from trace files");
  std::string d_in, d_ref, d_out = "decay.csv";
  double d_min = 0.0, d_tau = 2.0;
  int d_steps = 200;
  decay->add_option("--in", d_in, "directory of trace CSVs")->required();
  decay->add_option("--reference", d_ref, "reference config label")->required();
  decay->add_option("--out", d_out, "decay CSV");
  decay->add_option("--min-ref-time", d_min, "keep instances whose reference run took longer (s)");
  decay->add_option("--tau-max", d_tau, "largest time ratio");
  decay->add_option("--steps", d_steps, "grid points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      const auto cls = parse_instance_class(g_class);
      GeneratedInstance g;
      if (cls == InstanceClass::portfolio) {
        if (g_panel.empty()) {
          TimeSeriesPanel panel = synthetic_panel(g_n, 2 * g_n, g_seed);
          if (g_augment > 0) panel = augment_series(panel, g_augment, g_eta, g_seed + 1);
          g.inst = build_portfolio(panel, g_mu);
          g.params["periods"] = static_cast<double>(panel.periods());
        } else {
          TimeSeriesPanel panel = read_panel_csv(g_panel, g_prices);
          if (g_augment > 0) panel = augment_series(panel, g_augment, g_eta, g_seed);
          g.inst = build_portfolio(panel, g_mu);
          g.params["periods"] = static_cast<double>(panel.periods());
        }
        g.cls = cls;
        g.seed = g_seed;
        g.m = 2;
        g.params["mu"] = g_mu;
        if (g_augment > 0) {
          g.params["augment"] = g_augment;
          g.params["eta"] = g_eta;
        }
        g.inst.name = generated_name(cls, g.inst.n(), 2, g_seed);
      } else {
        g = generate_synthetic(cls, g_n, parse_m(g_m, g_n), g_seed, {BudgetKind::relaxed, g_slb, g_sub});
      }
      const auto report = validate(g.inst);
      for (const auto& msg : report.messages) std::cerr << "warning: " << msg << '\n';
      fs::create_directories(g_out);
      const fs::path base = fs::path(g_out) / g.inst.name;
      write_instance(g.inst, base.string() + ".qp");
      write_text(base.string() + ".json", g.metadata_json());
      std::cout << base.string() << ".qp\n";
      return report.ok() ? 0 : 1;
    }

    if (*solve) {
      const QpInstance inst = read_instance(s_instance);
      SdConfig cfg;
      cfg.master = parse_master(s_master);
      cfg.pricing = {s_pricing == "sifting", s_early, s_cuts};
      cfg.tol_sd = s_tol;
      cfg.time_limit_s = s_time;
      cfg.max_iters = s_iters;
      cfg.seed = effective_seed(cfg.seed);
      const SdResult res = sd_solve(inst, cfg);
      if (!s_trace.empty()) {
        std::ofstream tf(s_trace);
        if (!tf) throw std::runtime_error("cannot write " + s_trace);
        write_trace_csv(tf, inst.name, cfg.label(), res);
      }
      std::cout << "instance " << inst.name << "\nconfig " << cfg.label() << "\nstatus " << to_string(res.status)
                << "\nf " << format_double(res.f) << "\npricing_value " << format_double(res.final_pricing_value)
                << "\niterations " << res.iterations << "\nmaster_dim " << res.master_dim << "\ntime "
                << format_double(res.times.total) << "\ntime_split preprocessing=" << res.times.preprocessing
                << " master=" << res.times.master << " pricing=" << res.times.pricing
                << " updating=" << res.times.updating << '\n';
      return exit_for(res.status);
    }

    if (*bench) {
      const auto manifest = load_manifest(b_manifest);
      const auto records = run_bench(manifest, b_jobs);
      std::ofstream out(b_out);
      if (!out) throw std::runtime_error("cannot write " + b_out);
      write_bench_csv(out, records);
      for (const auto& r : records) {
        std::cerr << r.instance << ' ' << r.config << ' ' << r.status << ' ' << r.wall_time << "s"
                  << (r.message.empty() ? "" : " (" + r.message + ")") << '\n';
      }
      return bench_exit_code(records);
    }

    if (*prof) {
      const auto records = read_bench_csv(fs::path(p_in));
      const auto curves = perf_profile(records, p_solvers);
      std::ofstream out(p_out);
      if (!out) throw std::runtime_error("cannot write " + p_out);
      write_profile_csv(out, curves, p_tau);
      std::ofstream dat(fs::path(p_out).replace_extension(".dat"));
      write_profile_dat(dat, curves, p_tau);
      return 0;
    }

    if (*decay) {
      const auto traces = read_trace_dir(d_in);
      const auto curves = decay_trace(traces, d_ref, d_min, d_tau, d_steps);
      std::ofstream out(d_out);
      if (!out) throw std::runtime_error("cannot write " + d_out);
      write_decay_csv(out, curves);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
