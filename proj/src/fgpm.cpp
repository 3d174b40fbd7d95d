#include "sdqp/fgpm.hpp"

#include "sdqp/acdm.hpp"
#include "sdqp/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace sdqp {

void NonmonotoneReference::push(double f) {
  values_.push_back(f);
  if (values_.size() > capacity_) values_.pop_front();
}

double NonmonotoneReference::value() const {
  return *std::max_element(values_.begin(), values_.end());
}

double default_fgpm_step(const Matrix& H) {
  if (H.size() == 0) return 1.0;
  const double row_sum = H.cwiseAbs().rowwise().sum().maxCoeff();
  return row_sum > 0.0 ? 1.0 / row_sum : 1.0;
}

LineSearchStep armijo_spectral(const Matrix& H, const Vector& h, const Vector& lambda,
                               const Vector& d, double rho_k, double f_ref,
                               const FgpmParams& params) {
  LineSearchStep step;
  step.rho_k = rho_k;
  step.f_ref = f_ref;
  const Vector g = H * lambda + h;
  const Vector hd = H * d;
  const double f0 = 0.5 * lambda.dot(H * lambda) + h.dot(lambda);
  const double dhd = d.dot(hd);
  step.slope = g.dot(d);

  double alpha = rho_k;
  if (const auto cap = max_feasible_step(lambda, lambda + d); cap && *cap < alpha) alpha = *cap;
  // The master is quadratic, so f(λ + αd) is evaluated exactly from gᵀd and dᵀHd.
  auto f_at = [&](double a) { return f0 + a * step.slope + 0.5 * a * a * dhd; };
  while (f_at(alpha) > f_ref + params.gamma1 * alpha * step.slope) {
    if (++step.backtracks > params.max_backtracks) {
      step.failed = true;
      return step;
    }
    alpha *= params.delta;
  }
  step.beta = alpha;
  step.f_new = f_at(alpha);
  // y = ∇f(λ + αd) − ∇f(λ) = αHd.
  step.b = alpha * alpha * dhd;
  step.a = alpha * alpha * d.squaredNorm();
  if (step.b <= 0.0) {
    step.rho_next = params.rho_max;
  } else {
    step.rho_next = std::min(params.rho_max, std::max(params.rho_min, step.a / step.b));
  }
  return step;
}

FgpmResult solve_master_fgpm(const MasterState& state, const FgpmParams& params, bool record_steps) {
  const Matrix& H = state.H();
  const Vector& h = state.h();
  const double s = params.step.value_or(default_fgpm_step(H));
  FgpmResult res;
  Vector lambda = state.lambda();
  if (lambda.size() == 0) throw std::invalid_argument("empty master");
  if (lambda.minCoeff() < 0.0 || std::abs(lambda.sum() - 1.0) > 1e-12) {
    lambda = project_simplex_fast(lambda);
  }
  NonmonotoneReference reference(params.memory);
  double rho = std::clamp(params.rho0, params.rho_min, params.rho_max);
  Vector best = lambda;
  double best_f = state.master_objective(lambda);

  for (res.iterations = 0; res.iterations < params.max_iters; ++res.iterations) {
    const Vector g = H * lambda + h;
    const Vector lambda_hat = project_simplex_fast(lambda - s * g);
    const Vector d = lambda_hat - lambda;
    res.residual = d.cwiseAbs().maxCoeff();
    if (res.residual <= params.tol) {
      res.converged = true;
      break;
    }
    const double f = state.master_objective(lambda);
    reference.push(f);
    auto step = armijo_spectral(H, h, lambda, d, rho, reference.value(), params);
    if (record_steps) res.steps.push_back(step);
    if (step.failed) {
      res.line_search_failed = true;
      break;
    }
    lambda += step.beta * d;
    // Keep the iterate exactly on the simplex.
    lambda = lambda.cwiseMax(0.0);
    lambda /= lambda.sum();
    rho = step.rho_next;
    const double f_new = state.master_objective(lambda);
    if (f_new < best_f) {
      best_f = f_new;
      best = lambda;
    }
  }
  if (!res.converged && !res.line_search_failed) res.iteration_cap = true;
  res.lambda = res.converged ? lambda : best;
  return res;
}

}  // namespace sdqp
