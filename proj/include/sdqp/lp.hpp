#pragma once

#include "sdqp/problem.hpp"

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace sdqp {

enum class RowSense { equal, greater_equal };

/// min costᵀx  s.t.  A.row(i) x (= | ≥) b_i,  lower ≤ x ≤ upper (entries may be ±inf).
struct LpProblem {
  Matrix A;  // column-major, rows × n
  Vector b;
  std::vector<RowSense> sense;
  Vector lower;
  Vector upper;
  Vector cost;

  [[nodiscard]] Eigen::Index rows() const { return A.rows(); }
  [[nodiscard]] Eigen::Index cols() const { return A.cols(); }
};

/// Feasible set of the QP (E, I, bounds) plus extra ≥ rows, with the given cost.
LpProblem make_lp(const QpInstance& inst, const Vector& cost,
                  std::span<const LinearRow> extra_ineq = {});

enum class LpStatus { optimal, early_stopped };

struct LpOptions {
  /// Halt at the first basic feasible solution with costᵀx ≤ threshold.
  std::optional<double> early_stop_below;
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  int refactor_every = 50;
  int bland_after_degenerate = 200;
  long max_pivots = 1'000'000;
};

struct LpResult {
  Vector x;
  double objective = 0.0;
  /// Row duals y (cost = Aᵀy + reduced costs); meaningful when status is optimal.
  Vector duals;
  Vector reduced_costs;
  LpStatus status = LpStatus::optimal;
  long pivots = 0;
  long phase1_pivots = 0;
  int sifting_rounds = 0;
  std::size_t working_set_size = 0;
};

class LpError : public std::runtime_error {
 public:
  enum class Kind { infeasible, unbounded, iteration_limit, numerical };
  LpError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Dense bounded-variable revised simplex (two phases). Returns a vertex.
LpResult lp_solve(const LpProblem& lp, const LpOptions& opts = {});

struct SiftingOptions {
  std::vector<Eigen::Index> initial_columns;
  std::size_t batch = 50;
};

/// Column sifting: restricted solves over a growing working set of structural
/// columns, priced against the full column set with the restricted duals.
LpResult sifting_solve(const LpProblem& lp, const SiftingOptions& sift,
                       const LpOptions& opts = {});

}  // namespace sdqp
