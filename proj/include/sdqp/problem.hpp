#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdqp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// One linear constraint row: aᵀx = b (equality) or aᵀx ≥ b (inequality).
struct LinearRow {
  Vector a;
  double b = 0.0;
};

/// Convex QP  min xᵀQx + cᵀx  s.t.  a_iᵀx = b_i (E),  a_iᵀx ≥ b_i (I),  l ≤ x ≤ u.
///
/// The objective carries no ½ factor, so the gradient is 2Qx + c. Bounds are
/// kept apart from the general rows so the LP engine can treat them as simple
/// bounds; either side may be absent (or hold ±inf entries).
struct QpInstance {
  std::string name;
  RowMatrix Q;
  Vector c;
  std::vector<LinearRow> eq;
  std::vector<LinearRow> ineq;
  std::optional<Vector> lower;
  std::optional<Vector> upper;

  [[nodiscard]] Eigen::Index n() const { return c.size(); }

  /// Checks dimensions and forces exact symmetry of Q (Q ← (Q + Qᵀ)/2).
  void finalize();

  [[nodiscard]] double lower_bound(Eigen::Index j) const;
  [[nodiscard]] double upper_bound(Eigen::Index j) const;
};

struct Evaluation {
  double value = 0.0;
  Vector gradient;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

double eval_objective(const QpInstance& inst, const Vector& x);
Vector eval_gradient(const QpInstance& inst, const Vector& x);
Evaluation evaluate(const QpInstance& inst, const Vector& x);

/// Largest constraint violation of x over E, I and bounds (0 when feasible).
double max_violation(const QpInstance& inst, const Vector& x);

struct ValidationReport {
  bool asymmetric = false;
  bool indefinite = false;
  bool infeasible = false;
  bool unbounded = false;
  double asymmetry = 0.0;
  double min_eigenvalue_estimate = 0.0;
  std::vector<std::string> messages;

  [[nodiscard]] bool ok() const { return !asymmetric && !indefinite && !infeasible && !unbounded; }
};

/// Report-only validation: symmetry, PSD probe, nonempty and bounded feasible set.
ValidationReport validate(const QpInstance& inst);

/// Smallest-eigenvalue probe of a symmetric matrix by shifted power iteration.
double min_eigenvalue_probe(const RowMatrix& Q, int iterations = 300);

/// QPTXT1 text format. Numbers are written with 17 significant digits.
QpInstance read_instance(const std::filesystem::path& path);
QpInstance parse_instance(const std::string& text, const std::string& name = {});
void write_instance(const QpInstance& inst, const std::filesystem::path& path);
std::string format_instance(const QpInstance& inst);

/// 17-significant-digit decimal, the exact round-trip form used by every text output.
std::string format_double(double v);

}  // namespace sdqp
