#pragma once

#include "sdqp/lp.hpp"
#include "sdqp/problem.hpp"

#include <limits>
#include <vector>

namespace sdqp {

/// Shrinking cut ∇f(x_i)ᵀx ≤ ∇f(x_i)ᵀx_i, valid for every later iterate with f ≤ f(x_i).
struct ShrinkingCut {
  Vector a;
  double beta = 0.0;
  long origin_iter = 0;

  [[nodiscard]] double slack(const Vector& x) const { return beta - a.dot(x); }
};

class CutPool {
 public:
  explicit CutPool(long cap = 100) : cap_(cap) {}

  /// Stores the cut of (x_k, ∇f(x_k)) unless iteration ≥ cap.
  bool add_cut(const Vector& x_k, const Vector& grad_k, long iteration);
  /// Removes cuts whose slack at the last pricing vertex exceeds tol. Returns the count removed.
  std::size_t prune_inactive(const Vector& last_vertex, double tol = 1e-7);

  /// Cuts as ≥ rows (−aᵀx ≥ −β) for the LP.
  [[nodiscard]] std::vector<LinearRow> as_rows() const;
  [[nodiscard]] const std::vector<ShrinkingCut>& cuts() const { return cuts_; }
  [[nodiscard]] std::size_t size() const { return cuts_.size(); }
  [[nodiscard]] long cap() const { return cap_; }
  [[nodiscard]] double min_slack(const Vector& x) const;

 private:
  long cap_;
  std::vector<ShrinkingCut> cuts_;
};

enum class PricingStatus { optimal, early_stopped };

struct PricingOutcome {
  Vector vertex;
  /// ∇f(x_k)ᵀ(x̃ − x_k)
  double value = 0.0;
  PricingStatus status = PricingStatus::optimal;
  long pivots = 0;
  int sifting_rounds = 0;
};

struct PricingOptions {
  /// ε of the early stop; +inf disables it.
  double early_eps = std::numeric_limits<double>::infinity();
  bool use_cuts = false;
  bool use_sifting = false;
  std::size_t sifting_batch = 0;  // 0: max(50, rows)
};

/// Adaptive early-stop threshold ε = scale·(1 + |f(x_k)|).
double early_stop_epsilon(double f_xk, double scale = 1e-4);

/// Solves min ∇f(x_k)ᵀ(x − x_k) over X (∩ C_k when cuts are on). With early
/// stopping, halts at the first vertex reaching value ≤ −ε; if none exists the
/// LP runs to optimality.
PricingOutcome price(const QpInstance& inst, const Vector& x_k, const Vector& grad,
                     const CutPool& pool, const PricingOptions& opts);

/// Initial sifting columns: support of x_k plus the 2·rows largest |g_j|.
std::vector<Eigen::Index> sifting_seed(const Vector& x_k, const Vector& grad, Eigen::Index rows,
                                       const QpInstance& inst);

}  // namespace sdqp
