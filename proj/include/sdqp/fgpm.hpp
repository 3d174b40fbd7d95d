#pragma once

#include "sdqp/master_state.hpp"

#include <deque>
#include <optional>
#include <vector>

namespace sdqp {

struct FgpmParams {
  /// Fixed gradient step s; default 1 / (max row sum of |H|).
  std::optional<double> step;
  double rho_min = 1e-10;
  double rho_max = 1e10;
  double rho0 = 1.0;
  double gamma1 = 1e-4;
  double delta = 0.5;
  int memory = 10;
  double tol = 1e-6;
  long max_iters = 100000;
  int max_backtracks = 60;
};

/// max of the last M+1 objective values (ring buffer).
class NonmonotoneReference {
 public:
  explicit NonmonotoneReference(int memory) : capacity_(static_cast<std::size_t>(memory) + 1) {}
  void push(double f);
  [[nodiscard]] double value() const;

 private:
  std::size_t capacity_;
  std::deque<double> values_;
};

struct LineSearchStep {
  double beta = 0.0;
  double rho_k = 0.0;
  double rho_next = 0.0;
  double f_ref = 0.0;    // f̄_k
  double f_new = 0.0;    // f(λ + βd)
  double slope = 0.0;    // ∇f(λ)ᵀd
  double a = 0.0;
  double b = 0.0;
  int backtracks = 0;
  bool failed = false;
};

/// Nonmonotone Armijo search along d from λ with spectral update of ρ.
/// The trial step starts at min(ρ_k, α_max), α_max being the largest step
/// keeping λ + αd on the simplex.
LineSearchStep armijo_spectral(const Matrix& H, const Vector& h, const Vector& lambda,
                               const Vector& d, double rho_k, double f_ref,
                               const FgpmParams& params);

struct FgpmResult {
  Vector lambda;
  long iterations = 0;
  double residual = 0.0;  // ‖p[λ − s∇f]_Δ − λ‖∞ at exit
  bool converged = false;
  bool iteration_cap = false;
  bool line_search_failed = false;
  std::vector<LineSearchStep> steps;  // filled when record_steps is set
};

/// Projected gradient on the master simplex: d = p[λ − s∇f(λ)] − λ, then the
/// nonmonotone spectral line search. Warm starts from state.lambda().
FgpmResult solve_master_fgpm(const MasterState& state, const FgpmParams& params = {},
                             bool record_steps = false);

/// Default fixed step s = 1 / max row sum of |H| (1 when H = 0).
double default_fgpm_step(const Matrix& H);

}  // namespace sdqp
