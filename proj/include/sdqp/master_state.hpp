#pragma once

#include "sdqp/problem.hpp"

#include <span>
#include <vector>

namespace sdqp {

/// Master problem over conv(B) in barycentric weights λ:
///   F(λ) = f(Bλ) = ½ λᵀHλ + hᵀλ,  H = 2BᵀQB,  h = Bᵀc.
///
/// Each vertex carries its cached product Qx̃, so adding a vertex costs one
/// dense product plus k dot products and H is never rebuilt from scratch.
class MasterState {
 public:
  MasterState() = default;
  explicit MasterState(const QpInstance& inst);

  /// Appends x̃ with weight 0 (weight 1 when the basis was empty).
  /// Throws DuplicateVertex when x̃ matches a basis vertex within 1e-10 (ℓ∞).
  void add_vertex(const Vector& vertex);

  /// Removes the listed basis positions; weights are renormalized to sum 1.
  void remove_vertices(std::span<const Eigen::Index> positions);

  /// Drops every vertex with λ_i ≤ tol, always retaining the heaviest one.
  /// Returns the removed positions (ascending, in pre-removal numbering).
  std::vector<Eigen::Index> drop_vertices(double tol);

  /// Position of a basis vertex equal to x̃ within tol (ℓ∞), or −1.
  [[nodiscard]] Eigen::Index find_vertex(const Vector& vertex, double tol = 1e-10) const;

  void set_lambda(const Vector& lambda);

  [[nodiscard]] Eigen::Index size() const { return lambda_.size(); }
  [[nodiscard]] const Matrix& H() const { return H_; }
  [[nodiscard]] const Vector& h() const { return h_; }
  [[nodiscard]] const Vector& lambda() const { return lambda_; }
  [[nodiscard]] const std::vector<Vector>& vertices() const { return vertices_; }
  [[nodiscard]] const std::vector<Vector>& qx_cache() const { return qx_; }

  [[nodiscard]] double master_objective(const Vector& lambda) const;
  [[nodiscard]] Vector master_gradient(const Vector& lambda) const;

  /// x = Bλ and Qx = Σ λ_i Qx̃_i (from the cache).
  [[nodiscard]] Vector point() const;
  [[nodiscard]] Vector point(const Vector& lambda) const;
  [[nodiscard]] Vector q_times_point() const;
  /// ∇f(Bλ) = 2QBλ + c, from the cache.
  [[nodiscard]] Vector gradient() const;

 private:
  friend MasterState master_from_matrices(const Matrix& H, const Vector& h, const Vector& lambda);

  const QpInstance* inst_ = nullptr;
  std::vector<Vector> vertices_;
  std::vector<Vector> qx_;
  Matrix H_;
  Vector h_;
  Vector lambda_;
};

class DuplicateVertex : public std::runtime_error {
 public:
  explicit DuplicateVertex(Eigen::Index position)
      : std::runtime_error("vertex already in the master basis at position " + std::to_string(position)),
        position_(position) {}
  [[nodiscard]] Eigen::Index position() const { return position_; }

 private:
  Eigen::Index position_;
};

/// ∇F(λ) = Hλ + h = Bᵀ(2Qx + c).
Vector master_gradient(const MasterState& state);

/// Simplex KKT residual of λ for ½λᵀHλ + hᵀλ: with g = Hλ + h and ν = gᵀλ,
/// max( max_{λ_i>0} |g_i − ν|, max_i (ν − g_i)₊ ).
double simplex_kkt_residual(const Matrix& H, const Vector& h, const Vector& lambda);

/// Builds a master directly from H and h (no vertices), for standalone master tests.
MasterState master_from_matrices(const Matrix& H, const Vector& h, const Vector& lambda);

}  // namespace sdqp
