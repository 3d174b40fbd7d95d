#include "sdqp/master_state.hpp"

#include <algorithm>
#include <cmath>

namespace sdqp {

MasterState::MasterState(const QpInstance& inst) : inst_(&inst) {
  H_.resize(0, 0);
  h_.resize(0);
  lambda_.resize(0);
}

Eigen::Index MasterState::find_vertex(const Vector& vertex, double tol) const {
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    if ((vertices_[i] - vertex).cwiseAbs().maxCoeff() <= tol) return static_cast<Eigen::Index>(i);
  }
  return -1;
}

void MasterState::add_vertex(const Vector& vertex) {
  if (inst_ == nullptr) throw std::logic_error("master has no instance attached");
  if (vertex.size() != inst_->n()) throw DimensionError("vertex has wrong dimension");
  if (const auto pos = find_vertex(vertex); pos >= 0) throw DuplicateVertex(pos);
  const auto k = size();
  Vector qx = inst_->Q * vertex;
  H_.conservativeResize(k + 1, k + 1);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double hij = 2.0 * vertices_[static_cast<std::size_t>(i)].dot(qx);
    H_(i, k) = hij;
    H_(k, i) = hij;
  }
  H_(k, k) = 2.0 * vertex.dot(qx);
  h_.conservativeResize(k + 1);
  h_(k) = inst_->c.dot(vertex);
  lambda_.conservativeResize(k + 1);
  lambda_(k) = k == 0 ? 1.0 : 0.0;
  vertices_.push_back(vertex);
  qx_.push_back(std::move(qx));
}

void MasterState::remove_vertices(std::span<const Eigen::Index> positions) {
  if (positions.empty()) return;
  std::vector<char> gone(vertices_.size(), 0);
  for (const auto p : positions) gone.at(static_cast<std::size_t>(p)) = 1;
  std::vector<Eigen::Index> keep;
  for (std::size_t i = 0; i < gone.size(); ++i) {
    if (!gone[i]) keep.push_back(static_cast<Eigen::Index>(i));
  }
  if (keep.empty()) throw std::logic_error("cannot remove every master vertex");
  const auto k = static_cast<Eigen::Index>(keep.size());
  Matrix H(k, k);
  Vector h(k), lambda(k);
  std::vector<Vector> vertices, qx;
  for (Eigen::Index a = 0; a < k; ++a) {
    const auto ia = keep[static_cast<std::size_t>(a)];
    for (Eigen::Index b = 0; b < k; ++b) H(a, b) = H_(ia, keep[static_cast<std::size_t>(b)]);
    h(a) = h_(ia);
    lambda(a) = lambda_(ia);
    if (!vertices_.empty()) {
      vertices.push_back(std::move(vertices_[static_cast<std::size_t>(ia)]));
      qx.push_back(std::move(qx_[static_cast<std::size_t>(ia)]));
    }
  }
  const double sum = lambda.sum();
  if (sum > 0.0) {
    lambda /= sum;
  } else {
    lambda.setConstant(1.0 / static_cast<double>(k));
  }
  H_ = std::move(H);
  h_ = std::move(h);
  lambda_ = std::move(lambda);
  vertices_ = std::move(vertices);
  qx_ = std::move(qx);
}

std::vector<Eigen::Index> MasterState::drop_vertices(double tol) {
  std::vector<Eigen::Index> removed;
  if (size() <= 1) return removed;
  Eigen::Index heaviest = 0;
  lambda_.maxCoeff(&heaviest);
  for (Eigen::Index i = 0; i < size(); ++i) {
    if (i != heaviest && lambda_(i) <= tol) removed.push_back(i);
  }
  remove_vertices(removed);
  return removed;
}

void MasterState::set_lambda(const Vector& lambda) {
  if (lambda.size() != size()) throw DimensionError("lambda has wrong dimension");
  lambda_ = lambda;
}

double MasterState::master_objective(const Vector& lambda) const {
  return 0.5 * lambda.dot(H_ * lambda) + h_.dot(lambda);
}

Vector MasterState::master_gradient(const Vector& lambda) const { return H_ * lambda + h_; }

Vector MasterState::point(const Vector& lambda) const {
  Vector x = Vector::Zero(inst_->n());
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    const double w = lambda(static_cast<Eigen::Index>(i));
    if (w != 0.0) x += w * vertices_[i];
  }
  return x;
}

Vector MasterState::point() const { return point(lambda_); }

Vector MasterState::q_times_point() const {
  Vector qx = Vector::Zero(inst_->n());
  for (std::size_t i = 0; i < qx_.size(); ++i) {
    const double w = lambda_(static_cast<Eigen::Index>(i));
    if (w != 0.0) qx += w * qx_[i];
  }
  return qx;
}

Vector MasterState::gradient() const { return 2.0 * q_times_point() + inst_->c; }

Vector master_gradient(const MasterState& state) { return state.master_gradient(state.lambda()); }

double simplex_kkt_residual(const Matrix& H, const Vector& h, const Vector& lambda) {
  const Vector g = H * lambda + h;
  const double nu = g.dot(lambda);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (lambda(i) > 0.0) worst = std::max(worst, std::abs(g(i) - nu));
    worst = std::max(worst, nu - g(i));
  }
  return worst;
}

MasterState master_from_matrices(const Matrix& H, const Vector& h, const Vector& lambda) {
  MasterState state;
  state.H_ = H;
  state.h_ = h;
  state.lambda_ = lambda;
  return state;
}

}  // namespace sdqp
