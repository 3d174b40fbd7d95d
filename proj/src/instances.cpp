#include "sdqp/instances.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace sdqp {

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  while (u1 == 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
  has_spare_ = true;
  return r * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

RowMatrix generate_q(Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("generate_q: n must be positive");
  Rng rng(seed);
  Matrix G(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) G(i, j) = rng.normal();
  }
  const Matrix U = Eigen::HouseholderQR<Matrix>(G).householderQ();
  Vector sigma(n);
  for (Eigen::Index i = 0; i < n; ++i) sigma(i) = 3.0 * static_cast<double>(i + 1) / static_cast<double>(n);
  const Matrix US = U * sigma.asDiagonal();
  RowMatrix Q = US * U.transpose();
  RowMatrix sym = (Q + Q.transpose()) * 0.5;
  return sym;
}

Vector generate_linear_cost(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  Vector c(n);
  for (Eigen::Index i = 0; i < n; ++i) c(i) = rng.uniform(0.05, 0.4);
  return c;
}

ConstraintBlock generate_stepwise_constraints(Eigen::Index n, Eigen::Index m, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("step-wise constraints need m >= 1");
  const Eigen::Index s = (2 * n) / (m + 1);
  if (s < 2) throw std::invalid_argument("step-wise constraints need s = floor(2n/(m+1)) >= 2");
  const Eigen::Index stride = s / 2;
  Rng rng(seed);
  ConstraintBlock out;
  out.A = RowMatrix::Zero(m, n);
  out.b.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index start = stride * i;  // 0-based form of 1 + (s/2)(i−1)
    const Eigen::Index stop = start + s;
    if (stop > n) out.truncated = true;
    for (Eigen::Index j = start; j < std::min(stop, n); ++j) out.A(i, j) = 1.0;
    const double f = rng.uniform(0.4, 1.0);
    out.b(i) = f * static_cast<double>(s) / static_cast<double>(n);
  }
  return out;
}

ConstraintBlock generate_random_constraints(Eigen::Index n, Eigen::Index m, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("random constraints need m >= 1");
  Rng rng(seed);
  ConstraintBlock out;
  out.A.resize(m, n);
  out.b.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) out.A(i, j) = rng.uniform();
    out.b(i) = 0.75 * out.A.row(i).minCoeff() + 0.25 * out.A.row(i).maxCoeff();
  }
  return out;
}

QpInstance attach_budget(QpInstance inst, const Budget& budget) {
  const Vector e = Vector::Ones(inst.n());
  switch (budget.kind) {
    case BudgetKind::none:
      break;
    case BudgetKind::budget:
      inst.eq.push_back({e, 1.0});
      break;
    case BudgetKind::relaxed:
      if (budget.slb > budget.sub) throw std::invalid_argument("relaxed budget needs slb <= sub");
      inst.ineq.push_back({e, budget.slb});
      inst.ineq.push_back({-e, -budget.sub});
      break;
  }
  return inst;
}

QpInstance build_portfolio(const TimeSeriesPanel& panel, double mu) {
  const auto n = panel.assets();
  const auto T = panel.periods();
  if (T < 2) throw std::invalid_argument("portfolio needs at least two periods");
  if (!panel.values.allFinite()) throw std::invalid_argument("time series contains NaN or inf");
  const Vector r = panel.values.rowwise().mean();
  const Matrix centered = panel.values.colwise() - r;
  QpInstance inst;
  inst.Q = (centered * centered.transpose()) / static_cast<double>(T - 1);
  inst.c = Vector::Zero(n);
  inst.ineq.push_back({r, mu});
  inst.eq.push_back({Vector::Ones(n), 1.0});
  inst.lower = Vector::Zero(n);
  inst.upper = Vector::Ones(n);
  inst.finalize();
  return inst;
}

TimeSeriesPanel augment_series(const TimeSeriesPanel& panel, int k, double eta, std::uint64_t seed) {
  if (k < 1 || k > 4) throw std::invalid_argument("augment_series: k must be in 1..4");
  const auto n = panel.assets();
  const auto T = panel.periods();
  Rng rng(seed);
  TimeSeriesPanel out;
  out.values.resize(n * (k + 1), T);
  out.values.topRows(n) = panel.values;
  out.names = panel.names;
  out.names.resize(static_cast<std::size_t>(n));
  for (int clone = 1; clone <= k; ++clone) {
    for (Eigen::Index a = 0; a < n; ++a) {
      const auto row = clone * n + a;
      for (Eigen::Index t = 0; t < T; ++t) {
        out.values(row, t) = panel.values(a, t) * (1.0 + rng.uniform(-eta, eta));
      }
      const std::string base = panel.names.size() > static_cast<std::size_t>(a)
                                   ? panel.names[static_cast<std::size_t>(a)]
                                   : "a" + std::to_string(a);
      out.names.push_back(base + "_c" + std::to_string(clone));
    }
  }
  return out;
}

TimeSeriesPanel read_panel_csv(const std::filesystem::path& path, bool prices_to_returns) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open time series " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      if (!cell.empty() && cell.back() == '\r') cell.pop_back();
      cells.push_back(cell);
    }
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
  TimeSeriesPanel panel;
  panel.names = split(line);
  const auto n = static_cast<Eigen::Index>(panel.names.size());
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    if (static_cast<Eigen::Index>(cells.size()) != n) {
      throw ParseError(line_no, "expected " + std::to_string(n) + " columns");
    }
    std::vector<double> row;
    for (const auto& cell : cells) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw ParseError(line_no, "malformed number '" + cell + "'");
      }
      if (!std::isfinite(v)) throw ParseError(line_no, "non-finite value");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  const auto T = static_cast<Eigen::Index>(rows.size());
  panel.values.resize(n, T);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index a = 0; a < n; ++a) panel.values(a, t) = rows[static_cast<std::size_t>(t)][static_cast<std::size_t>(a)];
  }
  if (prices_to_returns) {
    if (T < 2) throw std::runtime_error("price series needs at least two periods");
    Matrix ret(n, T - 1);
    for (Eigen::Index t = 1; t < T; ++t) {
      ret.col(t - 1) = panel.values.col(t).cwiseQuotient(panel.values.col(t - 1)).array() - 1.0;
    }
    panel.values = std::move(ret);
  }
  return panel;
}

TimeSeriesPanel synthetic_panel(Eigen::Index assets, Eigen::Index periods, std::uint64_t seed) {
  Rng rng(seed);
  Vector mean(assets), beta(assets), vol(assets);
  for (Eigen::Index a = 0; a < assets; ++a) {
    mean(a) = rng.uniform(0.002, 0.015);
    beta(a) = rng.uniform(0.5, 1.5);
    vol(a) = rng.uniform(0.01, 0.04);
  }
  TimeSeriesPanel panel;
  panel.values.resize(assets, periods);
  for (Eigen::Index t = 0; t < periods; ++t) {
    const double factor = 0.02 * rng.normal();
    for (Eigen::Index a = 0; a < assets; ++a) {
      panel.values(a, t) = mean(a) + beta(a) * factor + vol(a) * rng.normal();
    }
  }
  for (Eigen::Index a = 0; a < assets; ++a) panel.names.push_back("a" + std::to_string(a));
  return panel;
}

InstanceClass parse_instance_class(const std::string& label) {
  static const std::map<std::string, InstanceClass> table = {
      {"S", InstanceClass::S},     {"S-b", InstanceClass::S_b}, {"S-rb", InstanceClass::S_rb},
      {"R", InstanceClass::R},     {"R-b", InstanceClass::R_b}, {"R-rb", InstanceClass::R_rb},
      {"portfolio", InstanceClass::portfolio}};
  const auto it = table.find(label);
  if (it == table.end()) throw std::invalid_argument("unknown instance class '" + label + "'");
  return it->second;
}

std::string class_label(InstanceClass cls) {
  switch (cls) {
    case InstanceClass::S: return "S";
    case InstanceClass::S_b: return "S-b";
    case InstanceClass::S_rb: return "S-rb";
    case InstanceClass::R: return "R";
    case InstanceClass::R_b: return "R-b";
    case InstanceClass::R_rb: return "R-rb";
    case InstanceClass::portfolio: return "portfolio";
  }
  return "?";
}

std::string GeneratedInstance::metadata_json() const {
  nlohmann::ordered_json j;
  j["name"] = inst.name;
  j["class"] = class_label(cls);
  j["n"] = inst.n();
  j["m"] = m;
  j["seed"] = seed;
  j["truncated"] = truncated;
  j["params"] = params;
  return j.dump(2) + "\n";
}

std::string generated_name(InstanceClass cls, Eigen::Index n, Eigen::Index m, std::uint64_t seed) {
  return class_label(cls) + "_n" + std::to_string(n) + "_m" + std::to_string(m) + "_s" + std::to_string(seed);
}

GeneratedInstance generate_synthetic(InstanceClass cls, Eigen::Index n, Eigen::Index m, std::uint64_t seed,
                                     const Budget& relaxed) {
  if (cls == InstanceClass::portfolio) throw std::invalid_argument("use generate_portfolio for portfolio instances");
  GeneratedInstance g;
  g.cls = cls;
  g.m = m;
  g.seed = seed;
  QpInstance& inst = g.inst;
  inst.name = generated_name(cls, n, m, seed);
  inst.Q = generate_q(n, sub_seed(seed, 0));
  inst.c = generate_linear_cost(n, sub_seed(seed, 1));
  const bool stepwise = cls == InstanceClass::S || cls == InstanceClass::S_b || cls == InstanceClass::S_rb;
  ConstraintBlock rows = stepwise ? generate_stepwise_constraints(n, m, sub_seed(seed, 2))
                                  : generate_random_constraints(n, m, sub_seed(seed, 2));
  g.truncated = rows.truncated;
  for (Eigen::Index i = 0; i < m; ++i) inst.ineq.push_back({rows.A.row(i).transpose(), rows.b(i)});
  inst.lower = Vector::Zero(n);
  inst.upper = Vector::Ones(n);
  Budget budget;
  if (cls == InstanceClass::S_b || cls == InstanceClass::R_b) budget.kind = BudgetKind::budget;
  if (cls == InstanceClass::S_rb || cls == InstanceClass::R_rb) budget = relaxed;
  inst = attach_budget(std::move(inst), budget);
  inst.finalize();
  g.params["lower"] = 0.0;
  g.params["upper"] = 1.0;
  if (budget.kind == BudgetKind::relaxed) {
    g.params["slb"] = budget.slb;
    g.params["sub"] = budget.sub;
  }
  return g;
}

GeneratedInstance generate_portfolio(Eigen::Index n, double mu, std::uint64_t seed) {
  GeneratedInstance g;
  g.cls = InstanceClass::portfolio;
  g.seed = seed;
  g.m = 2;
  g.inst = build_portfolio(synthetic_panel(n, 2 * n, seed), mu);
  g.inst.name = generated_name(InstanceClass::portfolio, n, 2, seed);
  g.params["mu"] = mu;
  g.params["periods"] = static_cast<double>(2 * n);
  return g;
}

}  // namespace sdqp
