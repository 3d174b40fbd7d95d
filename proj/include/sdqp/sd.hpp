#pragma once

#include "sdqp/acdm.hpp"
#include "sdqp/fgpm.hpp"
#include "sdqp/pricing.hpp"
#include "sdqp/problem.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sdqp {

enum class MasterKind { acdm, fgpm, oracle_master };
enum class SdStatus { optimal, time_limit, iter_limit, stalled };

std::string to_string(MasterKind m);
std::string to_string(SdStatus s);
MasterKind parse_master(const std::string& s);

struct PricingConfig {
  bool sifting = false;
  bool early_stop = false;
  bool cuts = false;

  /// "D", "E", "C", "CE", "Sif", "Sif-E", "Sif-C", "Sif-CE".
  [[nodiscard]] std::string label() const;
  static PricingConfig parse(const std::string& label);
  /// The eight combinations, in the order D, E, C, CE, Sif, Sif-E, Sif-C, Sif-CE.
  static std::vector<PricingConfig> all();
};

struct SdConfig {
  MasterKind master = MasterKind::acdm;
  PricingConfig pricing;
  /// Stop when the pricing value is ≥ −tol_sd·(1 + |f(x_k)|).
  double tol_sd = 1e-6;
  double drop_tol = 1e-10;
  double time_limit_s = 1000.0;
  long max_iters = 100000;
  std::uint64_t seed = 1;
  /// |X₀|: the cᵀx minimizer plus (size − 1) vertices of seeded random costs.
  int initial_vertices = 1;
  /// Iteration after which no more shrinking cuts are added.
  long cut_cap = 100;
  double early_eps_scale = 1e-4;
  FgpmParams fgpm;
  AcdmOptions acdm;
  /// Copies each added vertex into the trace record.
  bool record_vertices = false;

  /// e.g. "acdm/Sif-CE".
  [[nodiscard]] std::string label() const;
  static SdConfig from_label(const std::string& label);
};

struct SdIteration {
  long iter = 0;
  double time = 0.0;  // seconds since start, at the end of the iteration
  double f = 0.0;     // f(x_k), the point priced at this iteration
  double pricing_value = 0.0;
  PricingStatus pricing_status = PricingStatus::optimal;
  double early_eps = 0.0;  // ε in force (inf when early stopping is off)
  Eigen::Index master_dim = 0;  // after the master solve and dropping
  std::size_t cuts = 0;         // pool size used by this pricing
  double preprocessing = 0.0;   // cumulative
  double master = 0.0;
  double pricing = 0.0;
  double updating = 0.0;
  Vector vertex;  // added vertex, only with record_vertices
};

struct SdTimes {
  double preprocessing = 0.0;
  double master = 0.0;
  double pricing = 0.0;
  double updating = 0.0;
  double total = 0.0;
};

struct SdResult {
  Vector x;
  double f = 0.0;
  SdStatus status = SdStatus::optimal;
  std::vector<SdIteration> trace;
  SdTimes times;
  long iterations = 0;
  Eigen::Index master_dim = 0;
  double final_pricing_value = 0.0;
  int initial_vertex_count = 0;
};

/// Read-only view handed to the observer after each iteration.
struct SdObserverView {
  const SdIteration& record;
  const MasterState& state;
  const CutPool& cuts;
  const DirectionSet& directions;
};

/// Simplicial decomposition driver.
class SdSolver {
 public:
  SdSolver(const QpInstance& inst, SdConfig config);

  void set_observer(std::function<void(const SdObserverView&)> observer) { observer_ = std::move(observer); }

  /// X₀ and the singleton (or |X₀|-vertex) master.
  void initialize();
  SdResult solve();

  [[nodiscard]] const MasterState& state() const { return state_; }

 private:
  void solve_master(const std::optional<Vector>& new_direction, double fgpm_tol);

  const QpInstance& inst_;
  SdConfig config_;
  MasterState state_;
  DirectionSet directions_;
  CutPool cuts_;
  std::function<void(const SdObserverView&)> observer_;
  int initial_count_ = 0;
};

SdResult sd_solve(const QpInstance& inst, const SdConfig& config);

}  // namespace sdqp
