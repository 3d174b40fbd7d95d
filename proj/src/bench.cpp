#include "sdqp/bench.hpp"

#include "sdqp/oracle.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace sdqp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (const char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

double parse_double(const std::string& s, std::size_t line) {
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw ParseError(line, "bad number '" + s + "'");
  return v;
}

long parse_long(const std::string& s, std::size_t line) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) throw ParseError(line, "bad integer '" + s + "'");
  return v;
}

std::string safe_file_part(std::string s) {
  for (char& ch : s) {
    if (ch == '/' || ch == '\\' || ch == ' ') ch = '_';
  }
  return s;
}

}  // namespace

std::string bench_csv_header() {
  return "instance,class,n,m,config,status,wall_time,f,er,ei,iterations,master_dim,"
         "t_preprocessing,t_master,t_pricing,t_updating,message";
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRecord>& records) {
  out << bench_csv_header() << '\n';
  for (const auto& r : records) {
    out << csv_quote(r.instance) << ',' << csv_quote(r.cls) << ',' << r.n << ',' << r.m << ','
        << csv_quote(r.config) << ',' << r.status << ',' << format_double(r.wall_time) << ','
        << format_double(r.f) << ',' << format_double(r.er) << ',' << format_double(r.ei) << ','
        << r.iterations << ',' << r.master_dim << ',' << format_double(r.t_preprocessing) << ','
        << format_double(r.t_master) << ',' << format_double(r.t_pricing) << ','
        << format_double(r.t_updating) << ',' << csv_quote(r.message) << '\n';
  }
}

std::vector<BenchRecord> read_bench_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty results file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != bench_csv_header()) throw ParseError(1, "unexpected results header");
  std::vector<BenchRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c = csv_split(line);
    if (c.size() != 17) throw ParseError(line_no, "expected 17 fields, found " + std::to_string(c.size()));
    BenchRecord r;
    r.instance = c[0];
    r.cls = c[1];
    r.n = parse_long(c[2], line_no);
    r.m = parse_long(c[3], line_no);
    r.config = c[4];
    r.status = c[5];
    r.wall_time = parse_double(c[6], line_no);
    r.f = parse_double(c[7], line_no);
    r.er = parse_double(c[8], line_no);
    r.ei = parse_double(c[9], line_no);
    r.iterations = parse_long(c[10], line_no);
    r.master_dim = parse_long(c[11], line_no);
    r.t_preprocessing = parse_double(c[12], line_no);
    r.t_master = parse_double(c[13], line_no);
    r.t_pricing = parse_double(c[14], line_no);
    r.t_updating = parse_double(c[15], line_no);
    r.message = c[16];
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<BenchRecord> read_bench_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_bench_csv(in);
}

double relative_error(double f, double f_ref) { return std::abs(f - f_ref) / std::max(1.0, std::abs(f_ref)); }

std::uint64_t effective_seed(std::uint64_t manifest_seed) {
  const char* env = std::getenv("SDQP_SEED");
  if (env == nullptr || *env == '\0') return manifest_seed;
  char* end = nullptr;
  const auto v = std::strtoull(env, &end, 10);
  if (*end != '\0') throw std::invalid_argument(std::string("SDQP_SEED is not an unsigned integer: ") + env);
  return v;
}

BenchManifest parse_manifest(const std::string& json_text, const std::filesystem::path& base_dir) {
  const auto j = nlohmann::json::parse(json_text);
  BenchManifest m;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  for (const auto& item : j.at("instances")) {
    if (item.is_string()) {
      m.instances.push_back({resolve(item.get<std::string>()), ""});
    } else {
      m.instances.push_back({resolve(item.at("path").get<std::string>()), item.value("class", std::string{})});
    }
  }
  for (const auto& c : j.at("configs")) {
    const auto label = c.get<std::string>();
    (void)SdConfig::from_label(label);  // validate early
    m.configs.push_back(label);
  }
  m.tol = j.value("tol", m.tol);
  m.time_limit = j.value("time_limit", m.time_limit);
  m.max_iters = j.value("max_iters", m.max_iters);
  m.seed = effective_seed(j.value("seed", m.seed));
  if (j.contains("trace_dir")) m.trace_dir = resolve(j["trace_dir"].get<std::string>());
  m.reference = j.value("reference", m.reference);
  return m;
}

BenchManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path.parent_path());
}

namespace {

struct Reference {
  bool available = false;
  double f = 0.0;
  Vector x;
};

Reference compute_reference(const QpInstance& inst, const BenchManifest& m) {
  Reference ref;
  if (m.reference == "none") return ref;
  const bool use_oracle = m.reference == "oracle" || (m.reference == "auto" && inst.n() <= 30);
  try {
    if (use_oracle) {
      const auto sol = oracle_solve_qp(inst);
      ref = {true, sol.objective, sol.x};
    } else {
      SdConfig cfg = SdConfig::from_label(m.reference == "auto" ? "acdm/D" : m.reference);
      cfg.tol_sd = m.reference == "auto" ? 1e-9 : m.tol;
      cfg.time_limit_s = m.time_limit;
      cfg.max_iters = m.max_iters;
      cfg.seed = m.seed;
      const auto res = sd_solve(inst, cfg);
      if (res.status == SdStatus::optimal) ref = {true, res.f, res.x};
    }
  } catch (const std::exception&) {
    ref.available = false;
  }
  return ref;
}

}  // namespace

std::vector<BenchRecord> run_bench(const BenchManifest& manifest, int jobs) {
  const std::size_t ni = manifest.instances.size();
  const std::size_t nc = manifest.configs.size();
  std::vector<BenchRecord> records(ni * nc);
  if (!manifest.trace_dir.empty()) std::filesystem::create_directories(manifest.trace_dir);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= ni) return;
      const auto& entry = manifest.instances[i];
      const std::string fallback_name = entry.path.stem().string();
      QpInstance inst;
      std::string load_error;
      try {
        inst = read_instance(entry.path);
      } catch (const std::exception& e) {
        load_error = e.what();
      }
      Reference ref;
      if (load_error.empty()) ref = compute_reference(inst, manifest);
      for (std::size_t c = 0; c < nc; ++c) {
        BenchRecord& r = records[i * nc + c];
        r.instance = load_error.empty() ? inst.name : fallback_name;
        r.cls = entry.cls;
        r.config = manifest.configs[c];
        if (!load_error.empty()) {
          r.status = "error";
          r.message = load_error;
          continue;
        }
        r.n = static_cast<long>(inst.n());
        r.m = static_cast<long>(inst.eq.size() + inst.ineq.size());
        try {
          SdConfig cfg = SdConfig::from_label(r.config);
          cfg.tol_sd = manifest.tol;
          cfg.time_limit_s = manifest.time_limit;
          cfg.max_iters = manifest.max_iters;
          cfg.seed = manifest.seed;
          const auto t0 = std::chrono::steady_clock::now();
          const SdResult res = sd_solve(inst, cfg);
          r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          r.status = to_string(res.status);
          r.f = res.f;
          r.iterations = res.iterations;
          r.master_dim = static_cast<long>(res.master_dim);
          r.t_preprocessing = res.times.preprocessing;
          r.t_master = res.times.master;
          r.t_pricing = res.times.pricing;
          r.t_updating = res.times.updating;
          if (ref.available && r.solved()) {
            r.er = relative_error(res.f, ref.f);
            r.ei = (res.x - ref.x).cwiseAbs().maxCoeff();
          }
          if (!manifest.trace_dir.empty()) {
            std::ofstream tf(manifest.trace_dir / (safe_file_part(r.instance) + "__" + safe_file_part(r.config) + ".csv"));
            write_trace_csv(tf, r.instance, r.config, res);
          }
        } catch (const std::exception& e) {
          r.status = "error";
          r.message = e.what();
        }
      }
    }
  };
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(std::max<std::size_t>(ni, 1))));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return records;
}

int bench_exit_code(const std::vector<BenchRecord>& records) {
  bool limit = false;
  for (const auto& r : records) {
    if (r.status == "error") return 1;
    if (!r.solved()) limit = true;
  }
  return limit ? 2 : 0;
}

double ProfileCurve::rho(double tau) const {
  if (ratios.empty()) return 0.0;
  const auto it = std::upper_bound(ratios.begin(), ratios.end(), tau);
  return static_cast<double>(it - ratios.begin()) / static_cast<double>(ratios.size());
}

std::vector<ProfileCurve> perf_profile(const std::vector<BenchRecord>& records,
                                       const std::vector<std::string>& solvers) {
  if (solvers.size() < 2) throw std::invalid_argument("performance profiles need at least two solvers");
  std::map<std::string, std::map<std::string, double>> times;  // solver -> instance -> t
  for (const auto& r : records) {
    if (std::find(solvers.begin(), solvers.end(), r.config) == solvers.end()) continue;
    times[r.config][r.instance] = r.solved() ? r.wall_time : kInf;
  }
  std::set<std::string> shared;
  bool first = true;
  for (const auto& s : solvers) {
    std::set<std::string> mine;
    for (const auto& [inst, t] : times[s]) mine.insert(inst);
    if (first) {
      shared = std::move(mine);
      first = false;
    } else {
      std::set<std::string> both;
      std::set_intersection(shared.begin(), shared.end(), mine.begin(), mine.end(),
                            std::inserter(both, both.begin()));
      shared = std::move(both);
    }
  }
  if (shared.empty()) throw std::invalid_argument("the solvers share no instances");
  std::vector<ProfileCurve> curves;
  for (const auto& s : solvers) curves.push_back({s, {}});
  for (const auto& inst : shared) {
    double best = kInf;
    for (const auto& s : solvers) best = std::min(best, times[s][inst]);
    for (std::size_t k = 0; k < solvers.size(); ++k) {
      const double t = times[solvers[k]][inst];
      double r = kInf;
      if (std::isfinite(t)) r = best > 0.0 ? t / best : (t > 0.0 ? kInf : 1.0);
      curves[k].ratios.push_back(std::max(r, 1.0));
    }
  }
  for (auto& c : curves) std::sort(c.ratios.begin(), c.ratios.end());
  return curves;
}

namespace {

std::vector<double> breakpoints(const std::vector<ProfileCurve>& curves, double tau_max) {
  std::set<double> pts{1.0, tau_max};
  for (const auto& c : curves) {
    for (const double r : c.ratios) {
      if (std::isfinite(r) && r <= tau_max) pts.insert(r);
    }
  }
  return {pts.begin(), pts.end()};
}

}  // namespace

void write_profile_csv(std::ostream& out, const std::vector<ProfileCurve>& curves, double tau_max) {
  out << "solver,tau,rho\n";
  const auto pts = breakpoints(curves, tau_max);
  for (const auto& c : curves) {
    for (const double t : pts) out << csv_quote(c.solver) << ',' << format_double(t) << ',' << format_double(c.rho(t)) << '\n';
  }
}

void write_profile_dat(std::ostream& out, const std::vector<ProfileCurve>& curves, double tau_max) {
  out << "# tau";
  for (const auto& c : curves) out << ' ' << safe_file_part(c.solver);
  out << '\n';
  for (const double t : breakpoints(curves, tau_max)) {
    out << format_double(t);
    for (const auto& c : curves) out << ' ' << format_double(c.rho(t));
    out << '\n';
  }
}

void write_trace_csv(std::ostream& out, const std::string& instance, const std::string& config,
                     const SdResult& result) {
  out << "instance,config,status,total_time,iter,time,f,pricing_value,pricing_status,master_dim,cuts,"
         "preprocessing,master,pricing,updating\n";
  for (const auto& it : result.trace) {
    out << csv_quote(instance) << ',' << csv_quote(config) << ',' << to_string(result.status) << ','
        << format_double(result.times.total) << ',' << it.iter << ',' << format_double(it.time) << ','
        << format_double(it.f) << ',' << format_double(it.pricing_value) << ','
        << (it.pricing_status == PricingStatus::early_stopped ? "early_stopped" : "optimal") << ','
        << it.master_dim << ',' << it.cuts << ',' << format_double(it.preprocessing) << ','
        << format_double(it.master) << ',' << format_double(it.pricing) << ',' << format_double(it.updating)
        << '\n';
  }
}

RunTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, path.string() + ": empty trace");
  RunTrace t;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c = csv_split(line);
    if (c.size() != 15) throw ParseError(line_no, path.string() + ": expected 15 fields");
    t.instance = c[0];
    t.config = c[1];
    t.status = c[2];
    t.total_time = parse_double(c[3], line_no);
    t.points.push_back({parse_double(c[5], line_no), parse_double(c[6], line_no)});
  }
  return t;
}

std::vector<RunTrace> read_trace_dir(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<RunTrace> out;
  for (const auto& f : files) out.push_back(read_trace_csv(f));
  return out;
}

double trace_value_at(const RunTrace& trace, double t) {
  if (trace.points.empty()) return std::numeric_limits<double>::quiet_NaN();
  double v = trace.points.front().f;
  for (const auto& p : trace.points) {
    if (p.time > t) break;
    v = p.f;
  }
  return v;
}

std::vector<DecayCurve> decay_curves(const std::vector<RunTrace>& traces,
                                     const std::map<std::string, double>& reference_times,
                                     const std::map<std::string, double>& reference_values, double tau_max,
                                     int steps) {
  if (reference_times.empty() || reference_values.empty()) throw std::invalid_argument("decay curves need a reference");
  std::map<std::string, std::vector<const RunTrace*>> by_solver;
  for (const auto& t : traces) by_solver[t.config].push_back(&t);
  std::vector<DecayCurve> out;
  for (const auto& [solver, runs] : by_solver) {
    DecayCurve curve;
    curve.solver = solver;
    for (int s = 0; s <= steps; ++s) {
      const double tau = tau_max * static_cast<double>(s) / static_cast<double>(steps);
      double sum = 0.0;
      int count = 0;
      for (const auto* run : runs) {
        const auto tt = reference_times.find(run->instance);
        const auto tv = reference_values.find(run->instance);
        if (tt == reference_times.end() || tv == reference_values.end() || tv->second == 0.0) continue;
        sum += trace_value_at(*run, tau * tt->second) / tv->second;
        ++count;
      }
      curve.tau.push_back(tau);
      curve.ratio.push_back(count > 0 ? sum / count : std::numeric_limits<double>::quiet_NaN());
      curve.count.push_back(count);
    }
    out.push_back(std::move(curve));
  }
  return out;
}

std::vector<DecayCurve> decay_trace(const std::vector<RunTrace>& traces, const std::string& reference_label,
                                    double min_reference_time, double tau_max, int steps) {
  std::map<std::string, double> times, values;
  for (const auto& t : traces) {
    if (t.config != reference_label || t.points.empty()) continue;
    if (t.total_time <= min_reference_time) continue;
    times[t.instance] = t.total_time;
    values[t.instance] = t.points.back().f;
  }
  if (times.empty()) throw std::invalid_argument("no usable traces for reference '" + reference_label + "'");
  return decay_curves(traces, times, values, tau_max, steps);
}

void write_decay_csv(std::ostream& out, const std::vector<DecayCurve>& curves) {
  out << "solver,tau,ratio,instances\n";
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.tau.size(); ++i) {
      out << csv_quote(c.solver) << ',' << format_double(c.tau[i]) << ',' << format_double(c.ratio[i]) << ','
          << c.count[i] << '\n';
    }
  }
}

}  // namespace sdqp
