#pragma once

#include "sdqp/problem.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace sdqp {

/// Seeded generator with platform-independent uniform and normal draws
/// (the std distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Assets × periods.
struct TimeSeriesPanel {
  Matrix values;
  std::vector<std::string> names;

  [[nodiscard]] Eigen::Index assets() const { return values.rows(); }
  [[nodiscard]] Eigen::Index periods() const { return values.cols(); }
};

/// Q = U·diag(3i/n)·Uᵀ with U the orthogonal factor of a seeded Gaussian matrix.
RowMatrix generate_q(Eigen::Index n, std::uint64_t seed);

/// c_i ~ U[0.05, 0.4].
Vector generate_linear_cost(Eigen::Index n, std::uint64_t seed);

struct ConstraintBlock {
  RowMatrix A;
  Vector b;
  /// Some step-wise window ran past n and was cut.
  bool truncated = false;
};

/// Step-wise rows: s = ⌊2n/(m+1)⌋ ones starting at 1 + ⌊s/2⌋(i−1) (1-based),
/// b_i = f_i·s/n with f_i ~ U[0.4, 1].
ConstraintBlock generate_stepwise_constraints(Eigen::Index n, Eigen::Index m, std::uint64_t seed);

/// A_ij ~ U[0, 1], b_i = 0.75·min_j A_ij + 0.25·max_j A_ij.
ConstraintBlock generate_random_constraints(Eigen::Index n, Eigen::Index m, std::uint64_t seed);

enum class BudgetKind { none, budget, relaxed };

struct Budget {
  BudgetKind kind = BudgetKind::none;
  double slb = 0.9;
  double sub = 1.1;
};

/// eᵀx = 1 into E, or eᵀx ≥ slb and −eᵀx ≥ −sub into I.
QpInstance attach_budget(QpInstance inst, const Budget& budget);

/// min xᵀΣx  s.t. rᵀx ≥ μ, eᵀx = 1, x ≥ 0 with unbiased sample moments.
/// The upper bound x ≤ 1 is implied by the budget and stored explicitly.
QpInstance build_portfolio(const TimeSeriesPanel& panel, double mu);

/// Appends k noisy clones of every asset: value·(1 + u), u ~ U[−eta, eta].
/// Clones of asset a follow all originals, ordered by clone index then asset.
TimeSeriesPanel augment_series(const TimeSeriesPanel& panel, int k, double eta, std::uint64_t seed);

/// CSV with a header of asset names and one row per period. With
/// prices_to_returns, columns are converted to simple returns p_t/p_{t−1} − 1.
TimeSeriesPanel read_panel_csv(const std::filesystem::path& path, bool prices_to_returns = false);

/// Seeded one-factor return panel with per-asset means in [0.002, 0.015].
TimeSeriesPanel synthetic_panel(Eigen::Index assets, Eigen::Index periods, std::uint64_t seed);

enum class InstanceClass { S, S_b, S_rb, R, R_b, R_rb, portfolio };

InstanceClass parse_instance_class(const std::string& label);
std::string class_label(InstanceClass cls);
inline constexpr InstanceClass kSyntheticClasses[] = {InstanceClass::S,   InstanceClass::S_b,
                                                      InstanceClass::S_rb, InstanceClass::R,
                                                      InstanceClass::R_b, InstanceClass::R_rb};

struct GeneratedInstance {
  QpInstance inst;
  InstanceClass cls = InstanceClass::S;
  Eigen::Index m = 0;
  std::uint64_t seed = 0;
  bool truncated = false;
  std::map<std::string, double> params;

  /// JSON sidecar (seed, class, parameters).
  [[nodiscard]] std::string metadata_json() const;
};

/// One synthetic instance of the given class: box [0, 1], m generated rows, optional budget.
/// Sub-seeds for Q, c and the rows are derived from seed.
GeneratedInstance generate_synthetic(InstanceClass cls, Eigen::Index n, Eigen::Index m, std::uint64_t seed,
                                     const Budget& relaxed = {BudgetKind::relaxed, 0.9, 1.1});

/// Portfolio instance on a synthetic panel of n assets and 2n periods.
GeneratedInstance generate_portfolio(Eigen::Index n, double mu, std::uint64_t seed);

/// Instance name used for generated files, e.g. "S-b_n2000_m42_s7".
std::string generated_name(InstanceClass cls, Eigen::Index n, Eigen::Index m, std::uint64_t seed);

}  // namespace sdqp
