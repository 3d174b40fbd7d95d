#pragma once

#include "sdqp/master_state.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace sdqp {

/// Mutually H-conjugate barycentric directions, kept across master solves.
struct DirectionSet {
  std::vector<Vector> directions;
  std::vector<Vector> h_directions;  // H d, cached
  std::vector<double> curvature;     // dᵀHd
  /// True when the directions span the affine hull on which the current λ is optimal.
  bool valid = false;

  void clear();
  void push(Vector d, const Matrix& H);
  /// Appends a zero coordinate to every direction (new vertex).
  void pad();
  /// Deletes the listed coordinates. Invalidates the set if any removed entry was nonzero.
  void remove_coordinates(std::span<const Eigen::Index> positions);
  [[nodiscard]] std::size_t size() const { return directions.size(); }

  /// max over i ≠ j of |dᵢᵀHdⱼ| / √(dᵢᵀHdᵢ · dⱼᵀHdⱼ), skipping zero-curvature directions.
  [[nodiscard]] double conjugacy_error(const Matrix& H) const;
};

struct Conjugated {
  Vector d;
  bool zero = false;  // d̄ was fully deflated by D
};

/// Gram-Schmidt-like H-conjugation of d̄ against D (two passes).
Conjugated conjugate_against(const Vector& d_bar, const DirectionSet& D, const Matrix& H);

/// Largest α ≥ 0 with (1−α)λˢ + αλᵗ ≥ 0; nullopt when λᵗ = λˢ.
std::optional<double> max_feasible_step(const Vector& lambda_s, const Vector& lambda_t);

/// argmin over β ∈ [0,1] of the master objective on the segment λˢ → λᵖ.
double exact_line_min(const Vector& lambda_s, const Vector& lambda_p, const Matrix& H, const Vector& h);

struct AcdmOptions {
  double zero_weight = 1e-10;
  double kkt_tol = 1e-10;
  int max_refinements = 3;
  /// Called after every accepted conjugate step.
  std::function<void(const DirectionSet&, const Vector& lambda)> on_step;
};

struct AcdmResult {
  Vector lambda;
  /// Coordinates with zero weight at exit, ascending.
  std::vector<Eigen::Index> dropped;
  int conjugate_steps = 0;
  int boundary_hits = 0;
  int reactivations = 0;
  double kkt_residual = 0.0;
};

/// Adaptive conjugate directions method on the master simplex.
///
/// With a valid D and a new direction d̄ (barycentric image of x̃ − x), one
/// conjugated step extends the previous optimum to the enlarged affine hull.
/// A boundary hit drops the zero-weight coordinates and rebuilds D from the
/// directions x̃_j − x*. On exit the simplex KKT conditions are checked over
/// every coordinate; a dropped coordinate with negative reduced gradient is
/// reactivated, so the returned λ minimizes over the whole simplex.
AcdmResult solve_master_acdm(const MasterState& state, DirectionSet& D,
                             const std::optional<Vector>& new_direction,
                             const AcdmOptions& opts = {});

}  // namespace sdqp
