#include "sdqp/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sdqp {

bool CutPool::add_cut(const Vector& x_k, const Vector& grad_k, long iteration) {
  if (iteration >= cap_) return false;
  cuts_.push_back({grad_k, grad_k.dot(x_k), iteration});
  return true;
}

std::size_t CutPool::prune_inactive(const Vector& last_vertex, double tol) {
  const auto before = cuts_.size();
  std::erase_if(cuts_, [&](const ShrinkingCut& cut) { return cut.slack(last_vertex) > tol; });
  return before - cuts_.size();
}

std::vector<LinearRow> CutPool::as_rows() const {
  std::vector<LinearRow> rows;
  rows.reserve(cuts_.size());
  for (const auto& cut : cuts_) rows.push_back({-cut.a, -cut.beta});
  return rows;
}

double CutPool::min_slack(const Vector& x) const {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& cut : cuts_) worst = std::min(worst, cut.slack(x));
  return worst;
}

double early_stop_epsilon(double f_xk, double scale) { return scale * (1.0 + std::abs(f_xk)); }

std::vector<Eigen::Index> sifting_seed(const Vector& x_k, const Vector& grad, Eigen::Index rows,
                                       const QpInstance& inst) {
  const auto n = grad.size();
  std::vector<Eigen::Index> seed;
  for (Eigen::Index j = 0; j < n; ++j) {
    // Support: coordinates away from their lower bound.
    const double lo = inst.lower_bound(j);
    const double ref = std::isfinite(lo) ? lo : 0.0;
    if (std::abs(x_k(j) - ref) > 1e-12) seed.push_back(j);
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  const auto take = std::min<std::size_t>(order.size(), static_cast<std::size_t>(2 * rows));
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](Eigen::Index a, Eigen::Index b) {
                      const double ga = std::abs(grad(a)), gb = std::abs(grad(b));
                      return ga != gb ? ga > gb : a < b;
                    });
  seed.insert(seed.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take));
  std::sort(seed.begin(), seed.end());
  seed.erase(std::unique(seed.begin(), seed.end()), seed.end());
  return seed;
}

PricingOutcome price(const QpInstance& inst, const Vector& x_k, const Vector& grad,
                     const CutPool& pool, const PricingOptions& opts) {
  std::vector<LinearRow> cut_rows;
  if (opts.use_cuts) cut_rows = pool.as_rows();
  const LpProblem lp = make_lp(inst, grad, cut_rows);
  const double base = grad.dot(x_k);

  LpOptions lp_opts;
  if (std::isfinite(opts.early_eps)) lp_opts.early_stop_below = base - opts.early_eps;

  LpResult res;
  if (opts.use_sifting) {
    SiftingOptions sift;
    sift.initial_columns = sifting_seed(x_k, grad, lp.rows(), inst);
    sift.batch = opts.sifting_batch > 0 ? opts.sifting_batch
                                        : std::max<std::size_t>(50, static_cast<std::size_t>(lp.rows()));
    res = sifting_solve(lp, sift, lp_opts);
  } else {
    res = lp_solve(lp, lp_opts);
  }
  PricingOutcome out;
  out.vertex = std::move(res.x);
  out.value = grad.dot(out.vertex) - base;
  out.status = res.status == LpStatus::early_stopped ? PricingStatus::early_stopped : PricingStatus::optimal;
  out.pivots = res.pivots;
  out.sifting_rounds = res.sifting_rounds;
  return out;
}

}  // namespace sdqp
