#pragma once

#include "sdqp/sd.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace sdqp {

/// One (instance, config) run. CSV columns, in order:
/// instance,class,n,m,config,status,wall_time,f,er,ei,iterations,master_dim,
/// t_preprocessing,t_master,t_pricing,t_updating,message
/// Doubles are written with 17 significant digits; er/ei are "nan" when undefined.
struct BenchRecord {
  std::string instance;
  std::string cls;
  long n = 0;
  long m = 0;
  std::string config;
  std::string status;  // optimal | time_limit | iter_limit | stalled | error
  double wall_time = 0.0;
  double f = std::numeric_limits<double>::quiet_NaN();
  double er = std::numeric_limits<double>::quiet_NaN();
  double ei = std::numeric_limits<double>::quiet_NaN();
  long iterations = 0;
  long master_dim = 0;
  double t_preprocessing = 0.0;
  double t_master = 0.0;
  double t_pricing = 0.0;
  double t_updating = 0.0;
  std::string message;

  [[nodiscard]] bool solved() const { return status == "optimal"; }
};

std::string bench_csv_header();
void write_bench_csv(std::ostream& out, const std::vector<BenchRecord>& records);
std::vector<BenchRecord> read_bench_csv(std::istream& in);
std::vector<BenchRecord> read_bench_csv(const std::filesystem::path& path);

/// Relative objective error |f − f_ref| / max(1, |f_ref|).
double relative_error(double f, double f_ref);

struct ManifestInstance {
  std::filesystem::path path;
  std::string cls;  // optional, copied into records
};

/// JSON manifest:
///   {"instances": ["a.qp", {"path": "b.qp", "class": "S-b"}],
///    "configs": ["acdm/Sif-CE", "fgpm/D"],
///    "tol": 1e-6, "time_limit": 1000, "seed": 1, "max_iters": 100000,
///    "trace_dir": "traces", "reference": "auto"}
/// Relative paths resolve against the manifest's directory. reference is
/// "auto" (oracle when n ≤ 30, else acdm/D at tol 1e-9), "oracle", "none",
/// or a config label.
struct BenchManifest {
  std::vector<ManifestInstance> instances;
  std::vector<std::string> configs;
  double tol = 1e-6;
  double time_limit = 1000.0;
  long max_iters = 100000;
  std::uint64_t seed = 1;
  std::filesystem::path trace_dir;
  std::string reference = "auto";
};

BenchManifest parse_manifest(const std::string& json_text, const std::filesystem::path& base_dir = {});
BenchManifest load_manifest(const std::filesystem::path& path);

/// SDQP_SEED when set, otherwise the given seed. Throws on a non-numeric value.
std::uint64_t effective_seed(std::uint64_t manifest_seed);

/// Runs every (instance, config) pair on a pool of `jobs` workers. Rows come
/// back in manifest order (instance-major) whatever the completion order.
std::vector<BenchRecord> run_bench(const BenchManifest& manifest, int jobs = 1);

/// 0 when every run is optimal, 2 when some run hit a limit, 1 on any error.
int bench_exit_code(const std::vector<BenchRecord>& records);

/// Dolan–Moré curve: ratios r_{p,s} = t_{p,s} / min_s t_{p,s} (inf for failures).
struct ProfileCurve {
  std::string solver;
  std::vector<double> ratios;  // sorted ascending
  /// Fraction of instances with r ≤ tau.
  [[nodiscard]] double rho(double tau) const;
};

/// Profiles over the instances every listed solver has a record for.
/// Throws when that intersection is empty or fewer than two solvers are given.
std::vector<ProfileCurve> perf_profile(const std::vector<BenchRecord>& records,
                                       const std::vector<std::string>& solvers);

/// Long-format CSV (solver,tau,rho) at every breakpoint, plus tau_max.
void write_profile_csv(std::ostream& out, const std::vector<ProfileCurve>& curves, double tau_max);
/// Whitespace table for gnuplot: tau then one column per solver.
void write_profile_dat(std::ostream& out, const std::vector<ProfileCurve>& curves, double tau_max);

struct TracePoint {
  double time = 0.0;
  double f = 0.0;
};

struct RunTrace {
  std::string instance;
  std::string config;
  std::string status;
  double total_time = 0.0;
  std::vector<TracePoint> points;
};

/// Per-iteration trace CSV: instance,config,status,total_time,iter,time,f,
/// pricing_value,pricing_status,master_dim,cuts,preprocessing,master,pricing,updating
void write_trace_csv(std::ostream& out, const std::string& instance, const std::string& config,
                     const SdResult& result);
RunTrace read_trace_csv(const std::filesystem::path& path);
/// Every *.csv trace in a directory, sorted by file name.
std::vector<RunTrace> read_trace_dir(const std::filesystem::path& dir);

struct DecayCurve {
  std::string solver;
  std::vector<double> tau;    // time / reference time
  std::vector<double> ratio;  // mean f / f_ref
  std::vector<int> count;     // instances averaged at each tau
};

/// Step-interpolated objective at time t (the first sample's value before it).
double trace_value_at(const RunTrace& trace, double t);

/// Mean over instances of f_s(τ·T_ref) / f_ref on τ = 0, tau_max/steps, …, tau_max.
/// Instances missing from the reference maps, or with f_ref = 0, are skipped.
std::vector<DecayCurve> decay_curves(const std::vector<RunTrace>& traces,
                                     const std::map<std::string, double>& reference_times,
                                     const std::map<std::string, double>& reference_values,
                                     double tau_max = 2.0, int steps = 200);

/// Reference times/values taken from the traces of `reference_label`, keeping
/// instances whose reference time exceeds min_reference_time.
std::vector<DecayCurve> decay_trace(const std::vector<RunTrace>& traces, const std::string& reference_label,
                                    double min_reference_time = 0.0, double tau_max = 2.0, int steps = 200);

void write_decay_csv(std::ostream& out, const std::vector<DecayCurve>& curves);

}  // namespace sdqp
