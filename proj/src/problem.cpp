#include "sdqp/problem.hpp"

#include "sdqp/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace sdqp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_dim(const QpInstance& inst, const Vector& x) {
  if (x.size() != inst.n()) {
    throw DimensionError("point has dimension " + std::to_string(x.size()) +
                         ", instance has n = " + std::to_string(inst.n()));
  }
}

}  // namespace

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

void QpInstance::finalize() {
  const auto dim = c.size();
  if (Q.rows() != dim || Q.cols() != dim) throw DimensionError("Q must be n x n with n = dim(c)");
  for (const auto* rows : {&eq, &ineq}) {
    for (const auto& row : *rows) {
      if (row.a.size() != dim) throw DimensionError("constraint row has wrong length");
    }
  }
  if (lower && lower->size() != dim) throw DimensionError("lower bound has wrong length");
  if (upper && upper->size() != dim) throw DimensionError("upper bound has wrong length");
  RowMatrix sym = (Q + Q.transpose()) * 0.5;
  Q = std::move(sym);
}

double QpInstance::lower_bound(Eigen::Index j) const { return lower ? (*lower)(j) : -kInf; }
double QpInstance::upper_bound(Eigen::Index j) const { return upper ? (*upper)(j) : kInf; }

double eval_objective(const QpInstance& inst, const Vector& x) {
  require_dim(inst, x);
  return x.dot(inst.Q * x) + inst.c.dot(x);
}

Vector eval_gradient(const QpInstance& inst, const Vector& x) {
  require_dim(inst, x);
  return 2.0 * (inst.Q * x) + inst.c;
}

Evaluation evaluate(const QpInstance& inst, const Vector& x) {
  require_dim(inst, x);
  const Vector qx = inst.Q * x;
  return {x.dot(qx) + inst.c.dot(x), 2.0 * qx + inst.c};
}

double max_violation(const QpInstance& inst, const Vector& x) {
  require_dim(inst, x);
  double worst = 0.0;
  for (const auto& row : inst.eq) worst = std::max(worst, std::abs(row.a.dot(x) - row.b));
  for (const auto& row : inst.ineq) worst = std::max(worst, row.b - row.a.dot(x));
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    worst = std::max(worst, inst.lower_bound(j) - x(j));
    worst = std::max(worst, x(j) - inst.upper_bound(j));
  }
  return worst;
}

double min_eigenvalue_probe(const RowMatrix& Q, int iterations) {
  const auto n = Q.rows();
  if (n == 0) return 0.0;
  if (n == 1) return Q(0, 0);
  // Power iteration on shift·I − Q converges to the smallest eigenvalue of Q.
  const double shift = Q.cwiseAbs().rowwise().sum().maxCoeff();
  if (shift == 0.0) return 0.0;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = 1.0 + 0.5 * std::sin(1.0 + 7.0 * static_cast<double>(i));
  v.normalize();
  double rayleigh = v.dot(Q * v);
  for (int it = 0; it < iterations; ++it) {
    Vector w = shift * v - Q * v;
    const double norm = w.norm();
    if (norm == 0.0) break;
    v = w / norm;
    const double next = v.dot(Q * v);
    if (std::abs(next - rayleigh) <= 1e-14 * shift) {
      rayleigh = next;
      break;
    }
    rayleigh = next;
  }
  return rayleigh;
}

ValidationReport validate(const QpInstance& inst) {
  ValidationReport report;
  const auto n = inst.n();

  report.asymmetry = n > 0 ? (inst.Q - inst.Q.transpose()).cwiseAbs().maxCoeff() : 0.0;
  if (report.asymmetry > 0.0) {
    report.asymmetric = true;
    report.messages.push_back("Q is not symmetric (max |Q_ij - Q_ji| = " +
                              format_double(report.asymmetry) + ")");
  }

  const double qnorm = n > 0 ? inst.Q.cwiseAbs().rowwise().sum().maxCoeff() : 0.0;
  // A handful of exact eigenvalues is cheap for small n; larger matrices use the probe.
  if (n > 0 && n <= 200) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix(inst.Q), Eigen::EigenvaluesOnly);
    report.min_eigenvalue_estimate = es.eigenvalues().minCoeff();
  } else {
    report.min_eigenvalue_estimate = min_eigenvalue_probe(inst.Q);
  }
  if (report.min_eigenvalue_estimate < -1e-8 * std::max(qnorm, 1.0)) {
    report.indefinite = true;
    report.messages.push_back("Q is not positive semidefinite (eigenvalue estimate " +
                              format_double(report.min_eigenvalue_estimate) + ")");
  }

  const Vector ones = Vector::Ones(n);
  auto probe = [&](const Vector& cost) -> bool {
    try {
      lp_solve(make_lp(inst, cost));
      return true;
    } catch (const LpError& e) {
      if (e.kind() == LpError::Kind::infeasible) {
        report.infeasible = true;
        report.messages.push_back("feasible set is empty");
      } else if (e.kind() == LpError::Kind::unbounded) {
        report.unbounded = true;
      } else {
        report.messages.push_back(std::string("LP probe failed: ") + e.what());
      }
      return false;
    }
  };

  if (!probe(ones) || !probe(-ones)) {
    if (report.unbounded) report.messages.push_back("feasible set is unbounded");
    return report;
  }
  // Every coordinate lacking a finite bound on some side needs its own probe.
  for (Eigen::Index j = 0; j < n && !report.unbounded && !report.infeasible; ++j) {
    const bool lo = std::isfinite(inst.lower_bound(j));
    const bool hi = std::isfinite(inst.upper_bound(j));
    if (lo && hi) continue;
    Vector e = Vector::Zero(n);
    e(j) = 1.0;
    if (!lo) probe(e);
    if (!hi && !report.unbounded) probe(-e);
  }
  if (report.unbounded) report.messages.push_back("feasible set is unbounded");
  return report;
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

void append_row(std::string& out, const Vector& v) {
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (j > 0) out += ' ';
    out += format_double(v(j));
  }
}

class LineReader {
 public:
  explicit LineReader(const std::string& text) : in_(text) {}

  std::vector<double> numbers(std::size_t expected, const std::string& what) {
    std::string line;
    do {
      if (!std::getline(in_, line)) {
        throw ParseError(line_no_ + 1, "unexpected end of file, missing " + what);
      }
      ++line_no_;
    } while (line.find_first_not_of(" \t\r") == std::string::npos);
    std::vector<double> out;
    out.reserve(expected);
    const char* p = line.c_str();
    while (true) {
      while (*p == ' ' || *p == '\t' || *p == '\r') ++p;
      if (*p == '\0') break;
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p) throw ParseError(line_no_, "malformed number in " + what);
      out.push_back(v);
      p = end;
    }
    if (out.size() != expected) {
      throw ParseError(line_no_, what + ": expected " + std::to_string(expected) +
                                     " numbers, found " + std::to_string(out.size()));
    }
    return out;
  }

  std::string header() {
    std::string line;
    if (!std::getline(in_, line)) throw ParseError(1, "empty file");
    ++line_no_;
    return line;
  }

  [[nodiscard]] std::size_t line_no() const { return line_no_; }

 private:
  std::istringstream in_;
  std::size_t line_no_ = 0;
};

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string format_instance(const QpInstance& inst) {
  const auto n = inst.n();
  const bool has_bounds = inst.lower.has_value() || inst.upper.has_value();
  std::string out = "QPTXT1 n " + std::to_string(n) + " eq " + std::to_string(inst.eq.size()) +
                    " ineq " + std::to_string(inst.ineq.size()) + " bounds " +
                    (has_bounds ? "1" : "0") + "\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    append_row(out, inst.Q.row(i).transpose());
    out += '\n';
  }
  append_row(out, inst.c);
  out += '\n';
  for (const auto* rows : {&inst.eq, &inst.ineq}) {
    for (const auto& row : *rows) {
      append_row(out, row.a);
      out += ' ';
      out += format_double(row.b);
      out += '\n';
    }
  }
  if (has_bounds) {
    append_row(out, inst.lower ? *inst.lower : Vector::Constant(n, -kInf));
    out += '\n';
    append_row(out, inst.upper ? *inst.upper : Vector::Constant(n, kInf));
    out += '\n';
  }
  return out;
}

QpInstance parse_instance(const std::string& text, const std::string& name) {
  LineReader reader(text);
  const std::string header = reader.header();
  std::istringstream hs(header);
  std::string magic, kn, keq, kineq, kbounds;
  long n = -1, neq = -1, nineq = -1, bounds = -1;
  hs >> magic >> kn >> n >> keq >> neq >> kineq >> nineq >> kbounds >> bounds;
  if (!hs || magic != "QPTXT1" || kn != "n" || keq != "eq" || kineq != "ineq" ||
      kbounds != "bounds" || n < 1 || neq < 0 || nineq < 0 || (bounds != 0 && bounds != 1)) {
    throw ParseError(1, "bad header, expected 'QPTXT1 n <n> eq <E> ineq <I> bounds <0|1>'");
  }
  QpInstance inst;
  inst.name = name;
  const auto un = static_cast<std::size_t>(n);
  inst.Q.resize(n, n);
  for (long i = 0; i < n; ++i) {
    const auto row = reader.numbers(un, "Q row " + std::to_string(i + 1));
    for (long j = 0; j < n; ++j) inst.Q(i, j) = row[static_cast<std::size_t>(j)];
  }
  inst.c = to_vector(reader.numbers(un, "linear cost c"));
  auto read_rows = [&](long count, const std::string& kind, std::vector<LinearRow>& out) {
    for (long i = 0; i < count; ++i) {
      auto v = reader.numbers(un + 1, kind + " row " + std::to_string(i + 1));
      const double b = v.back();
      v.pop_back();
      out.push_back({to_vector(v), b});
    }
  };
  read_rows(neq, "equality", inst.eq);
  read_rows(nineq, "inequality", inst.ineq);
  if (bounds == 1) {
    inst.lower = to_vector(reader.numbers(un, "lower bounds"));
    inst.upper = to_vector(reader.numbers(un, "upper bounds"));
  }
  const RowMatrix raw = inst.Q;
  inst.finalize();
  if (inst.Q != raw) throw ParseError(2, "Q is not symmetric");
  return inst;
}

QpInstance read_instance(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open instance file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_instance(ss.str(), path.stem().string());
}

void write_instance(const QpInstance& inst, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write instance file " + path.string());
  out << format_instance(inst);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace sdqp
