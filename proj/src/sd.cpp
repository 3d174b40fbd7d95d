#include "sdqp/sd.hpp"

#include "sdqp/instances.hpp"
#include "sdqp/lp.hpp"
#include "sdqp/oracle.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sdqp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

class Stopwatch {
 public:
  explicit Stopwatch(double& sink) : sink_(sink), t0_(Clock::now()) {}
  ~Stopwatch() { sink_ += seconds_since(t0_); }
  Stopwatch(const Stopwatch&) = delete;
  Stopwatch& operator=(const Stopwatch&) = delete;

 private:
  double& sink_;
  Clock::time_point t0_;
};

}  // namespace

std::string to_string(MasterKind m) {
  switch (m) {
    case MasterKind::acdm: return "acdm";
    case MasterKind::fgpm: return "fgpm";
    case MasterKind::oracle_master: return "oracle";
  }
  return "?";
}

std::string to_string(SdStatus s) {
  switch (s) {
    case SdStatus::optimal: return "optimal";
    case SdStatus::time_limit: return "time_limit";
    case SdStatus::iter_limit: return "iter_limit";
    case SdStatus::stalled: return "stalled";
  }
  return "?";
}

MasterKind parse_master(const std::string& s) {
  if (s == "acdm") return MasterKind::acdm;
  if (s == "fgpm") return MasterKind::fgpm;
  if (s == "oracle") return MasterKind::oracle_master;
  throw std::invalid_argument("unknown master '" + s + "'");
}

std::string PricingConfig::label() const {
  std::string tail;
  if (cuts) tail += 'C';
  if (early_stop) tail += 'E';
  if (sifting) return tail.empty() ? "Sif" : "Sif-" + tail;
  return tail.empty() ? "D" : tail;
}

PricingConfig PricingConfig::parse(const std::string& label) {
  PricingConfig p;
  std::string tail = label;
  if (label.rfind("Sif", 0) == 0) {
    p.sifting = true;
    tail = label.substr(3);
    if (!tail.empty()) {
      if (tail[0] != '-' || tail.size() == 1) throw std::invalid_argument("bad pricing label '" + label + "'");
      tail = tail.substr(1);
    }
  } else if (label == "D") {
    return p;
  }
  if (tail == "C") {
    p.cuts = true;
  } else if (tail == "E") {
    p.early_stop = true;
  } else if (tail == "CE") {
    p.cuts = p.early_stop = true;
  } else if (!(tail.empty() && p.sifting)) {
    throw std::invalid_argument("bad pricing label '" + label + "'");
  }
  return p;
}

std::vector<PricingConfig> PricingConfig::all() {
  std::vector<PricingConfig> out;
  for (bool sif : {false, true}) {
    out.push_back({sif, false, false});
    out.push_back({sif, true, false});
    out.push_back({sif, false, true});
    out.push_back({sif, true, true});
  }
  return out;
}

std::string SdConfig::label() const { return to_string(master) + "/" + pricing.label(); }

SdConfig SdConfig::from_label(const std::string& label) {
  const auto slash = label.find('/');
  if (slash == std::string::npos) throw std::invalid_argument("config label needs master/pricing: '" + label + "'");
  SdConfig cfg;
  cfg.master = parse_master(label.substr(0, slash));
  cfg.pricing = PricingConfig::parse(label.substr(slash + 1));
  return cfg;
}

SdSolver::SdSolver(const QpInstance& inst, SdConfig config)
    : inst_(inst), config_(std::move(config)), state_(inst), cuts_(config_.cut_cap) {}

void SdSolver::initialize() {
  state_ = MasterState(inst_);
  directions_ = DirectionSet{};
  cuts_ = CutPool(config_.cut_cap);
  state_.add_vertex(lp_solve(make_lp(inst_, inst_.c)).x);
  Rng rng(config_.seed);
  for (int i = 1; i < config_.initial_vertices; ++i) {
    Vector cost(inst_.n());
    for (Eigen::Index j = 0; j < cost.size(); ++j) cost(j) = rng.normal();
    const Vector v = lp_solve(make_lp(inst_, cost)).x;
    if (state_.find_vertex(v) < 0) state_.add_vertex(v);
  }
  initial_count_ = static_cast<int>(state_.size());
  if (state_.size() > 1) solve_master(std::nullopt, config_.fgpm.tol);
}

void SdSolver::solve_master(const std::optional<Vector>& new_direction, double fgpm_tol) {
  switch (config_.master) {
    case MasterKind::acdm: {
      const auto res = solve_master_acdm(state_, directions_, new_direction, config_.acdm);
      state_.set_lambda(res.lambda);
      break;
    }
    case MasterKind::fgpm: {
      FgpmParams params = config_.fgpm;
      params.tol = fgpm_tol;
      state_.set_lambda(solve_master_fgpm(state_, params).lambda);
      break;
    }
    case MasterKind::oracle_master: {
      if (state_.size() <= 8) {
        state_.set_lambda(oracle_simplex_qp(state_.H(), state_.h()));
      } else {
        directions_.valid = false;
        state_.set_lambda(solve_master_acdm(state_, directions_, std::nullopt, config_.acdm).lambda);
      }
      break;
    }
  }
}

SdResult SdSolver::solve() {
  const auto t0 = Clock::now();
  SdResult result;
  SdTimes& times = result.times;
  {
    Stopwatch sw(times.preprocessing);
    initialize();
  }
  result.initial_vertex_count = initial_count_;

  const double inf = std::numeric_limits<double>::infinity();
  auto close = [&](SdIteration& rec) {
    rec.master_dim = state_.size();
    rec.time = seconds_since(t0);
    rec.preprocessing = times.preprocessing;
    rec.master = times.master;
    rec.pricing = times.pricing;
    rec.updating = times.updating;
    result.trace.push_back(std::move(rec));
    if (observer_) observer_({result.trace.back(), state_, cuts_, directions_});
  };
  long k = 0;
  result.status = SdStatus::iter_limit;
  while (true) {
    Vector x, grad;
    double f = 0.0;
    {
      Stopwatch sw(times.updating);
      x = state_.point();
      const Vector qx = state_.q_times_point();
      f = x.dot(qx) + inst_.c.dot(x);
      grad = 2.0 * qx + inst_.c;
    }
    result.x = x;
    result.f = f;
    if (seconds_since(t0) >= config_.time_limit_s) {
      result.status = SdStatus::time_limit;
      break;
    }
    if (k >= config_.max_iters) {
      result.status = SdStatus::iter_limit;
      break;
    }

    SdIteration rec;
    rec.iter = k;
    rec.f = f;
    rec.cuts = config_.pricing.cuts ? cuts_.size() : 0;
    PricingOptions popts;
    popts.use_cuts = config_.pricing.cuts;
    popts.use_sifting = config_.pricing.sifting;
    popts.early_eps = config_.pricing.early_stop ? early_stop_epsilon(f, config_.early_eps_scale) : inf;
    rec.early_eps = popts.early_eps;
    const double tol = config_.tol_sd * (1.0 + std::abs(f));

    PricingOutcome out;
    {
      Stopwatch sw(times.pricing);
      out = price(inst_, x, grad, cuts_, popts);
    }
    if (config_.pricing.cuts) {
      Stopwatch sw(times.updating);
      cuts_.prune_inactive(out.vertex);
    }
    rec.pricing_value = out.value;
    rec.pricing_status = out.status;
    result.final_pricing_value = out.value;

    if (out.value >= -tol) {
      result.status = SdStatus::optimal;
      close(rec);
      break;
    }

    if (config_.pricing.cuts) {
      Stopwatch sw(times.updating);
      cuts_.add_cut(x, grad, k);
    }
    bool stalled = false;
    {
      // A repeated vertex means the previous master was not solved to
      // optimality; tighten it and price again before giving up.
      int retries = 0;
      double fgpm_tol = config_.fgpm.tol;
      while (state_.find_vertex(out.vertex) >= 0) {
        if (retries++ >= 3) {
          stalled = true;
          break;
        }
        fgpm_tol *= 1e-2;
        directions_.valid = false;
        {
          Stopwatch msw(times.master);
          solve_master(std::nullopt, fgpm_tol);
        }
        x = state_.point();
        const Vector qx = state_.q_times_point();
        f = x.dot(qx) + inst_.c.dot(x);
        grad = 2.0 * qx + inst_.c;
        result.x = x;
        result.f = f;
        rec.f = f;
        popts.early_eps = inf;
        rec.early_eps = inf;
        {
          Stopwatch psw(times.pricing);
          out = price(inst_, x, grad, cuts_, popts);
        }
        rec.pricing_value = out.value;
        rec.pricing_status = out.status;
        result.final_pricing_value = out.value;
        if (out.value >= -config_.tol_sd * (1.0 + std::abs(f))) break;
      }
    }
    if (stalled) {
      result.status = SdStatus::stalled;
      break;
    }
    if (out.value >= -config_.tol_sd * (1.0 + std::abs(f))) {
      result.status = SdStatus::optimal;
      close(rec);
      break;
    }

    std::optional<Vector> new_direction;
    {
      Stopwatch sw(times.updating);
      state_.add_vertex(out.vertex);
      directions_.pad();
      Vector d = -state_.lambda();
      d(d.size() - 1) += 1.0;
      new_direction = std::move(d);
      if (config_.record_vertices) rec.vertex = out.vertex;
    }
    {
      Stopwatch sw(times.master);
      const double f_start = state_.master_objective(state_.lambda());
      solve_master(new_direction, config_.fgpm.tol);
      // A descent vertex must strictly lower the master optimum. An inexact
      // master that stops at its warm start is re-solved more tightly.
      double fgpm_tol = config_.fgpm.tol;
      for (int attempt = 0; config_.master == MasterKind::fgpm && attempt < 6; ++attempt) {
        if (state_.master_objective(state_.lambda()) < f_start) break;
        fgpm_tol *= 1e-2;
        solve_master(std::nullopt, fgpm_tol);
      }
    }
    {
      Stopwatch sw(times.updating);
      const auto removed = state_.drop_vertices(config_.drop_tol);
      directions_.remove_coordinates(removed);
    }
    close(rec);
    ++k;
  }
  result.iterations = k;
  result.master_dim = state_.size();
  times.total = seconds_since(t0);
  return result;
}

SdResult sd_solve(const QpInstance& inst, const SdConfig& config) {
  SdSolver solver(inst, config);
  return solver.solve();
}

}  // namespace sdqp
