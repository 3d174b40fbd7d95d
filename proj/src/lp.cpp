#include "sdqp/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sdqp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTol = 1e-9;
constexpr double kDegenerateStep = 1e-12;

enum class VarState : unsigned char { basic, at_lower, at_upper, free_zero };

// Column layout: [0, n) structural, [n, n + ns) slacks of ≥ rows (column −e_i),
// [n + ns, n + ns + m) artificials (column ±e_i).
class Simplex {
 public:
  Simplex(const LpProblem& lp, const LpOptions& opts)
      : lp_(lp), opts_(opts), m_(lp.rows()), n_(lp.cols()) {
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (lp.sense[static_cast<std::size_t>(i)] == RowSense::greater_equal) {
        slack_row_.push_back(i);
      }
    }
    ns_ = static_cast<Eigen::Index>(slack_row_.size());
    total_ = n_ + ns_ + m_;
    lo_.resize(total_);
    up_.resize(total_);
    x_ = Vector::Zero(total_);
    cost_ = Vector::Zero(total_);
    state_.assign(static_cast<std::size_t>(total_), VarState::at_lower);
    art_sign_ = Vector::Ones(m_);
    lo_.head(n_) = lp.lower;
    up_.head(n_) = lp.upper;
    lo_.segment(n_, ns_).setZero();
    up_.segment(n_, ns_).setConstant(kInf);
    lo_.tail(m_).setZero();
    up_.tail(m_).setConstant(kInf);
    eligible_.assign(static_cast<std::size_t>(n_), 1);
  }

  // Restricts pricing to the structural columns flagged in mask.
  void set_eligible(const std::vector<char>& mask) {
    eligible_ = mask;
    eligible_list_.clear();
    for (Eigen::Index j = 0; j < n_; ++j) {
      if (mask[static_cast<std::size_t>(j)]) eligible_list_.push_back(j);
    }
  }
  void make_eligible(Eigen::Index j) {
    if (eligible_[static_cast<std::size_t>(j)]) return;
    eligible_[static_cast<std::size_t>(j)] = 1;
    eligible_list_.push_back(j);
  }
  [[nodiscard]] bool eligible(Eigen::Index j) const {
    return j >= n_ || eligible_[static_cast<std::size_t>(j)] != 0;
  }

  // Nonbasic starting point plus a crash basis of feasible slacks and artificials.
  void start() {
    for (Eigen::Index j = 0; j < n_; ++j) {
      if (lo_(j) > up_(j)) throw LpError(LpError::Kind::infeasible, "crossed bounds");
      if (std::isfinite(lo_(j))) {
        x_(j) = lo_(j);
        set_state(j, VarState::at_lower);
      } else if (std::isfinite(up_(j))) {
        x_(j) = up_(j);
        set_state(j, VarState::at_upper);
      } else {
        x_(j) = 0.0;
        set_state(j, VarState::free_zero);
      }
    }
    const Vector residual = lp_.b - lp_.A * x_.head(n_);
    basis_.assign(static_cast<std::size_t>(m_), -1);
    position_.assign(static_cast<std::size_t>(total_), -1);
    std::vector<Eigen::Index> slack_of_row(static_cast<std::size_t>(m_), -1);
    for (Eigen::Index s = 0; s < ns_; ++s) slack_of_row[static_cast<std::size_t>(slack_row_[static_cast<std::size_t>(s)])] = n_ + s;
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Eigen::Index slack = slack_of_row[static_cast<std::size_t>(i)];
      const Eigen::Index art = n_ + ns_ + i;
      if (slack >= 0 && residual(i) <= 0.0) {
        // aᵀx − s = b with s = aᵀx − b ≥ 0.
        x_(slack) = -residual(i);
        make_basic(slack, i);
        x_(art) = 0.0;
        lo_(art) = up_(art) = 0.0;
        set_state(art, VarState::at_lower);
      } else {
        art_sign_(i) = residual(i) >= 0.0 ? 1.0 : -1.0;
        x_(art) = std::abs(residual(i));
        make_basic(art, i);
      }
    }
    refactor();
  }

  // Phase 1 over eligible columns. Returns the remaining sum of artificials.
  double phase1() {
    cost_.setZero();
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Eigen::Index art = n_ + ns_ + i;
      if (up_(art) > 0.0) cost_(art) = 1.0;
    }
    iterate(/*phase2=*/false);
    return infeasibility();
  }

  [[nodiscard]] double infeasibility() const {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < m_; ++i) sum += std::abs(x_(n_ + ns_ + i));
    return sum;
  }

  // Fix every artificial at zero and drive basic ones out where a pivot exists.
  void end_phase1() {
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Eigen::Index art = n_ + ns_ + i;
      lo_(art) = up_(art) = 0.0;
      cost_(art) = 0.0;
      if (position_[static_cast<std::size_t>(art)] < 0) {
        x_(art) = 0.0;
        set_state(art, VarState::at_lower);
      }
    }
    for (Eigen::Index r = 0; r < m_; ++r) {
      const Eigen::Index art = basis_[static_cast<std::size_t>(r)];
      if (art < n_ + ns_) continue;
      Eigen::Index best = -1;
      double best_mag = 1e-7;
      for (Eigen::Index j = 0; j < n_ + ns_; ++j) {
        if (position_[static_cast<std::size_t>(j)] >= 0 || lo_(j) == up_(j)) continue;
        const double mag = std::abs(binv_.row(r).dot(column(j)));
        if (mag > best_mag) {
          best_mag = mag;
          best = j;
        }
      }
      if (best >= 0) {
        const Vector alpha = binv_times_column(best);
        x_(art) = 0.0;
        pivot(best, r, alpha, VarState::at_lower);
      }
    }
    refactor();
  }

  void set_phase2_cost() {
    cost_.setZero();
    cost_.head(n_) = lp_.cost;
  }

  // Free nonbasic columns enter the basis so that every phase-2 iterate is a vertex.
  void crash_free_columns() {
    for (Eigen::Index j = 0; j < n_; ++j) {
      if (state(j) != VarState::free_zero) continue;
      const double d = reduced_cost(j, duals());
      const Vector alpha = binv_times_column(j);
      const double first = d <= 0.0 ? 1.0 : -1.0;
      for (double dir : {first, -first}) {
        if (dir != first && d != 0.0) break;
        const auto ratio = ratio_test(j, dir, alpha);
        if (ratio.row >= 0) {
          apply_step(j, dir, ratio, alpha);
          break;
        }
      }
      if (state(j) == VarState::free_zero) {
        throw LpError(LpError::Kind::unbounded, "free column " + std::to_string(j) +
                                                    " is unbounded within the feasible set");
      }
    }
  }

  // Runs simplex pivots until optimal over eligible columns; true when halted early.
  bool iterate(bool phase2) {
    while (true) {
      if (phase2 && opts_.early_stop_below && objective() <= *opts_.early_stop_below) return true;
      const Vector y = duals();
      const Eigen::Index q = choose_entering(y);
      if (q < 0) return false;
      const double d = reduced_cost(q, y);
      const double dir = d < 0.0 ? 1.0 : -1.0;
      const Vector alpha = binv_times_column(q);
      const auto ratio = ratio_test(q, dir, alpha);
      if (ratio.row < 0 && !ratio.flip) {
        throw LpError(LpError::Kind::unbounded, phase2 ? "objective unbounded below"
                                                       : "unbounded phase-1 ray");
      }
      apply_step(q, dir, ratio, alpha);
      if (++pivots_ > opts_.max_pivots) {
        throw LpError(LpError::Kind::iteration_limit, "simplex pivot limit exceeded");
      }
      if (!phase2) ++phase1_pivots_;
    }
  }

  [[nodiscard]] double objective() const { return lp_.cost.dot(x_.head(n_)); }

  [[nodiscard]] Vector duals() const {
    Vector cb(m_);
    for (Eigen::Index r = 0; r < m_; ++r) cb(r) = cost_(basis_[static_cast<std::size_t>(r)]);
    return binv_.transpose() * cb;
  }

  // Structural reduced costs under the current cost vector.
  [[nodiscard]] Vector structural_reduced_costs(const Vector& y) const {
    return cost_.head(n_) - lp_.A.transpose() * y;
  }

  [[nodiscard]] bool attractive(Eigen::Index j, double d) const {
    const double tol = opts_.optimality_tol;
    switch (state(j)) {
      case VarState::basic:
        return false;
      case VarState::at_lower:
        return d < -tol && up_(j) > lo_(j);
      case VarState::at_upper:
        return d > tol && up_(j) > lo_(j);
      case VarState::free_zero:
        return std::abs(d) > tol;
    }
    return false;
  }

  [[nodiscard]] Vector x_struct() const { return x_.head(n_); }
  [[nodiscard]] long pivots() const { return pivots_; }
  [[nodiscard]] long phase1_pivots() const { return phase1_pivots_; }
  [[nodiscard]] Eigen::Index n() const { return n_; }

 private:
  struct Ratio {
    Eigen::Index row = -1;
    double step = kInf;
    bool flip = false;
    VarState leave_state = VarState::at_lower;
  };

  [[nodiscard]] VarState state(Eigen::Index j) const { return state_[static_cast<std::size_t>(j)]; }
  void set_state(Eigen::Index j, VarState s) { state_[static_cast<std::size_t>(j)] = s; }

  void make_basic(Eigen::Index j, Eigen::Index r) {
    basis_[static_cast<std::size_t>(r)] = j;
    position_[static_cast<std::size_t>(j)] = r;
    set_state(j, VarState::basic);
  }

  [[nodiscard]] Vector column(Eigen::Index j) const {
    if (j < n_) return lp_.A.col(j);
    Vector e = Vector::Zero(m_);
    if (j < n_ + ns_) {
      e(slack_row_[static_cast<std::size_t>(j - n_)]) = -1.0;
    } else {
      const Eigen::Index i = j - n_ - ns_;
      e(i) = art_sign_(i);
    }
    return e;
  }

  [[nodiscard]] Vector binv_times_column(Eigen::Index j) const {
    if (j < n_) return binv_ * lp_.A.col(j);
    if (j < n_ + ns_) return -binv_.col(slack_row_[static_cast<std::size_t>(j - n_)]);
    const Eigen::Index i = j - n_ - ns_;
    return art_sign_(i) * binv_.col(i);
  }

  [[nodiscard]] double reduced_cost(Eigen::Index j, const Vector& y) const {
    if (j < n_) return cost_(j) - lp_.A.col(j).dot(y);
    if (j < n_ + ns_) return cost_(j) + y(slack_row_[static_cast<std::size_t>(j - n_)]);
    const Eigen::Index i = j - n_ - ns_;
    return cost_(j) - art_sign_(i) * y(i);
  }

  Eigen::Index choose_entering(const Vector& y) {
    const bool bland = degenerate_run_ >= opts_.bland_after_degenerate;
    Eigen::Index best = -1;
    double best_score = 0.0;
    auto consider = [&](Eigen::Index j, double d) {
      if (!attractive(j, d)) return;
      if (bland) {
        if (best < 0 || j < best) best = j;
      } else if (std::abs(d) > best_score) {
        best_score = std::abs(d);
        best = j;
      }
    };
    if (eligible_list_.empty()) {
      const Vector d_struct = structural_reduced_costs(y);
      for (Eigen::Index j = 0; j < n_; ++j) {
        if (state(j) != VarState::basic) consider(j, d_struct(j));
      }
    } else {
      for (const Eigen::Index j : eligible_list_) {
        if (state(j) != VarState::basic) consider(j, reduced_cost(j, y));
      }
    }
    for (Eigen::Index j = n_; j < total_; ++j) {
      if (state(j) != VarState::basic) consider(j, reduced_cost(j, y));
    }
    return best;
  }

  [[nodiscard]] Ratio ratio_test(Eigen::Index q, double dir, const Vector& alpha) const {
    const bool bland = degenerate_run_ >= opts_.bland_after_degenerate;
    const double ftol = opts_.feasibility_tol;
    Ratio best;
    double best_pivot = 0.0;
    for (Eigen::Index r = 0; r < m_; ++r) {
      const double a = alpha(r);
      if (std::abs(a) <= kPivotTol) continue;
      const Eigen::Index j = basis_[static_cast<std::size_t>(r)];
      // Basic value moves at rate −dir·a per unit step of the entering column.
      const double rate = -dir * a;
      double limit = kInf;
      VarState hit = VarState::at_lower;
      if (rate < 0.0 && std::isfinite(lo_(j))) {
        limit = std::max(0.0, (x_(j) - lo_(j)) / -rate);
        hit = VarState::at_lower;
      } else if (rate > 0.0 && std::isfinite(up_(j))) {
        limit = std::max(0.0, (up_(j) - x_(j)) / rate);
        hit = VarState::at_upper;
      }
      if (!std::isfinite(limit)) continue;
      const double tie = ftol / std::abs(a);
      bool take = false;
      if (best.row < 0 || limit < best.step - tie) {
        take = true;
      } else if (limit <= best.step + tie) {
        take = bland ? j < basis_[static_cast<std::size_t>(best.row)] : std::abs(a) > best_pivot;
      }
      if (take) {
        best.row = r;
        best.step = limit;
        best.leave_state = hit;
        best_pivot = std::abs(a);
      }
    }
    if (std::isfinite(lo_(q)) && std::isfinite(up_(q))) {
      const double range = up_(q) - lo_(q);
      if (range <= best.step) {
        best.row = -1;
        best.step = range;
        best.flip = true;
      }
    }
    return best;
  }

  void apply_step(Eigen::Index q, double dir, const Ratio& ratio, const Vector& alpha) {
    const double theta = ratio.step;
    if (theta > 0.0) {
      x_(q) += dir * theta;
      for (Eigen::Index r = 0; r < m_; ++r) {
        x_(basis_[static_cast<std::size_t>(r)]) -= dir * theta * alpha(r);
      }
    }
    if (theta <= kDegenerateStep) {
      ++degenerate_run_;
    } else {
      degenerate_run_ = 0;
    }
    if (ratio.flip) {
      const bool to_upper = dir > 0.0;
      x_(q) = to_upper ? up_(q) : lo_(q);
      set_state(q, to_upper ? VarState::at_upper : VarState::at_lower);
      return;
    }
    pivot(q, ratio.row, alpha, ratio.leave_state);
  }

  void pivot(Eigen::Index q, Eigen::Index r, const Vector& alpha, VarState leave_state) {
    const Eigen::Index leaving = basis_[static_cast<std::size_t>(r)];
    if (std::isfinite(leave_state == VarState::at_upper ? up_(leaving) : lo_(leaving))) {
      x_(leaving) = leave_state == VarState::at_upper ? up_(leaving) : lo_(leaving);
    }
    position_[static_cast<std::size_t>(leaving)] = -1;
    set_state(leaving, leave_state);
    // A phase-1 artificial never re-enters once it leaves.
    if (leaving >= n_ + ns_) {
      lo_(leaving) = up_(leaving) = 0.0;
      x_(leaving) = 0.0;
      cost_(leaving) = 0.0;
    }
    make_basic(q, r);
    // Product-form update of the explicit inverse.
    const double pivot_value = alpha(r);
    binv_.row(r) /= pivot_value;
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (i != r && alpha(i) != 0.0) binv_.row(i) -= alpha(i) * binv_.row(r);
    }
    if (++since_refactor_ >= opts_.refactor_every) refactor();
  }

  void refactor() {
    since_refactor_ = 0;
    if (m_ == 0) {
      binv_.resize(0, 0);
      return;
    }
    Matrix basis_matrix(m_, m_);
    for (Eigen::Index r = 0; r < m_; ++r) basis_matrix.col(r) = column(basis_[static_cast<std::size_t>(r)]);
    Eigen::PartialPivLU<Matrix> lu(basis_matrix);
    binv_ = lu.inverse();
    if (!binv_.allFinite()) throw LpError(LpError::Kind::numerical, "singular basis");
    // x_B = B⁻¹ (b − N x_N)
    Vector rhs = lp_.b;
    for (Eigen::Index j = 0; j < total_; ++j) {
      if (state(j) == VarState::basic || x_(j) == 0.0) continue;
      if (j < n_) {
        rhs -= lp_.A.col(j) * x_(j);
      } else {
        rhs -= column(j) * x_(j);
      }
    }
    const Vector xb = binv_ * rhs;
    for (Eigen::Index r = 0; r < m_; ++r) x_(basis_[static_cast<std::size_t>(r)]) = xb(r);
  }

  const LpProblem& lp_;
  const LpOptions& opts_;
  Eigen::Index m_, n_, ns_ = 0, total_ = 0;
  std::vector<Eigen::Index> slack_row_;
  Vector lo_, up_, x_, cost_, art_sign_;
  std::vector<VarState> state_;
  std::vector<Eigen::Index> basis_, position_;
  std::vector<char> eligible_;
  std::vector<Eigen::Index> eligible_list_;  // empty means every column
  Matrix binv_;
  long pivots_ = 0;
  long phase1_pivots_ = 0;
  int since_refactor_ = 0;
  int degenerate_run_ = 0;
};

double infeasibility_tol(const LpProblem& lp, const LpOptions& opts) {
  const double scale = lp.b.size() > 0 ? lp.b.cwiseAbs().maxCoeff() : 0.0;
  return std::max(opts.feasibility_tol, 1e-9 * (1.0 + scale)) * static_cast<double>(std::max<Eigen::Index>(1, lp.rows()));
}

void check_shape(const LpProblem& lp) {
  const auto n = lp.cols();
  if (lp.b.size() != lp.rows() || static_cast<Eigen::Index>(lp.sense.size()) != lp.rows() ||
      lp.lower.size() != n || lp.upper.size() != n || lp.cost.size() != n) {
    throw DimensionError("inconsistent LP dimensions");
  }
}

LpResult finish(const Simplex& sx, const LpProblem& lp, bool early) {
  LpResult res;
  res.x = sx.x_struct();
  res.objective = lp.cost.dot(res.x);
  res.status = early ? LpStatus::early_stopped : LpStatus::optimal;
  res.duals = sx.duals();
  res.reduced_costs = sx.structural_reduced_costs(res.duals);
  res.pivots = sx.pivots();
  res.phase1_pivots = sx.phase1_pivots();
  return res;
}

}  // namespace

LpProblem make_lp(const QpInstance& inst, const Vector& cost, std::span<const LinearRow> extra_ineq) {
  const auto n = inst.n();
  if (cost.size() != n) throw DimensionError("LP cost has wrong dimension");
  const auto rows = static_cast<Eigen::Index>(inst.eq.size() + inst.ineq.size() + extra_ineq.size());
  LpProblem lp;
  lp.A.resize(rows, n);
  lp.b.resize(rows);
  lp.sense.reserve(static_cast<std::size_t>(rows));
  Eigen::Index r = 0;
  auto put = [&](const LinearRow& row, RowSense sense) {
    lp.A.row(r) = row.a.transpose();
    lp.b(r) = row.b;
    lp.sense.push_back(sense);
    ++r;
  };
  for (const auto& row : inst.eq) put(row, RowSense::equal);
  for (const auto& row : inst.ineq) put(row, RowSense::greater_equal);
  for (const auto& row : extra_ineq) put(row, RowSense::greater_equal);
  lp.lower = inst.lower ? *inst.lower : Vector::Constant(n, -kInf);
  lp.upper = inst.upper ? *inst.upper : Vector::Constant(n, kInf);
  lp.cost = cost;
  return lp;
}

LpResult lp_solve(const LpProblem& lp, const LpOptions& opts) {
  check_shape(lp);
  Simplex sx(lp, opts);
  sx.start();
  if (sx.phase1() > infeasibility_tol(lp, opts)) {
    throw LpError(LpError::Kind::infeasible, "LP is infeasible");
  }
  sx.end_phase1();
  sx.set_phase2_cost();
  sx.crash_free_columns();
  const bool early = sx.iterate(/*phase2=*/true);
  auto res = finish(sx, lp, early);
  res.working_set_size = static_cast<std::size_t>(lp.cols());
  return res;
}

LpResult sifting_solve(const LpProblem& lp, const SiftingOptions& sift, const LpOptions& opts) {
  check_shape(lp);
  const auto n = lp.cols();
  std::vector<char> mask(static_cast<std::size_t>(n), 0);
  std::size_t working = 0;
  auto add = [&](Eigen::Index j) {
    if (j < 0 || j >= n || mask[static_cast<std::size_t>(j)]) return;
    mask[static_cast<std::size_t>(j)] = 1;
    ++working;
  };
  for (auto j : sift.initial_columns) add(j);
  // Free columns always join: they must be basic for phase-2 iterates to be vertices.
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!std::isfinite(lp.lower(j)) && !std::isfinite(lp.upper(j))) add(j);
  }
  if (working == 0 && n > 0) add(0);

  Simplex sx(lp, opts);
  sx.set_eligible(mask);
  sx.start();
  const std::size_t batch = std::max<std::size_t>(1, sift.batch);
  int rounds = 0;

  // Prices every non-working column with the current duals; adds the `batch`
  // most attractive ones (ties by lowest index). Returns the number added.
  auto sift_round = [&]() -> std::size_t {
    ++rounds;
    const Vector y = sx.duals();
    const Vector d = sx.structural_reduced_costs(y);
    std::vector<std::pair<double, Eigen::Index>> candidates;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (mask[static_cast<std::size_t>(j)] || !sx.attractive(j, d(j))) continue;
      candidates.emplace_back(-std::abs(d(j)), j);
    }
    const std::size_t take = std::min(batch, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take),
                      candidates.end());
    for (std::size_t i = 0; i < take; ++i) {
      const auto j = candidates[i].second;
      mask[static_cast<std::size_t>(j)] = 1;
      sx.make_eligible(j);
      ++working;
    }
    return take;
  };

  const double tol = infeasibility_tol(lp, opts);
  while (true) {
    if (sx.phase1() <= tol) break;
    if (sift_round() == 0) throw LpError(LpError::Kind::infeasible, "LP is infeasible");
  }
  sx.end_phase1();
  sx.set_phase2_cost();
  sx.crash_free_columns();
  bool early = false;
  while (true) {
    early = sx.iterate(/*phase2=*/true);
    if (early) break;
    if (sift_round() == 0) break;
  }
  auto res = finish(sx, lp, early);
  res.sifting_rounds = rounds;
  res.working_set_size = working;
  return res;
}

}  // namespace sdqp
