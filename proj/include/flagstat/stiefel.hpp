#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "flagstat/flag.hpp"
#include "flagstat/numerics.hpp"
#include "flagstat/rng.hpp"

namespace flagstat {

/// Smooth cost on St(cols, rows) given through its ambient (Euclidean)
/// derivatives. The solver converts them to Riemannian quantities under the
/// embedded metric.
struct StiefelProblem {
  int rows = 0;
  int cols = 0;
  std::function<double(const Matrix&)> cost;
  std::function<Matrix(const Matrix&)> euclidean_gradient;
  /// (Y, V) -> D^2 f(Y)[V].
  std::function<Matrix(const Matrix&, const Matrix&)> euclidean_hessian;
};

struct TrustRegionConfig {
  int max_outer_iterations = 100;
  double gradient_norm_tolerance = 1e-9;
  /// Unset means sqrt(d_k) / 8.
  std::optional<double> initial_radius;
  /// Unset means sqrt(d_k).
  std::optional<double> max_radius;
  double acceptance_threshold = 0.1;
  /// Unset means d * d_k.
  std::optional<int> max_inner_iterations;
  /// Truncated-CG stopping rule ||r|| <= ||r0|| min(||r0||^theta, kappa).
  double cg_kappa = 0.1;
  double cg_theta = 1.0;
  /// Source of the random start when no initial point is given.
  RngStream rng{0, 0};

  /// Throws InvalidInput on nonpositive tolerances or a threshold outside (0, 0.25).
  void validate() const;
};

enum class Termination { GradientTolerance, MaxIterations };

const char* to_string(Termination t) noexcept;

struct SolveReport {
  Matrix point;
  double cost = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  Termination termination = Termination::MaxIterations;
  /// Cost at the start point and after every accepted step.
  std::vector<double> accepted_costs;
};

/// Flag-mean objective over St(d_k, d):
///   f(Y) = sum_j ((sum_i a_i) m_j - tr(I_j Y^T P_j Y)),  P_j = sum_i a_i X_j^(i) X_j^(i)T,
/// which equals sum_i a_i d_c(X^(i), Y)^2 on the manifold.
StiefelProblem flag_mean_problem(std::span<const FlagPoint> points, const WeightVector& weights);

/// G - Y sym(Y^T G).
Matrix tangent_project(const Matrix& y, const Matrix& g);

/// QR retraction qf(Y + V) with nonnegative R diagonal; returns Y itself for V = 0.
Matrix retract(const Matrix& y, const Matrix& v);

Matrix riemannian_gradient(const StiefelProblem& problem, const Matrix& y);

/// Hessian action proj(D^2 f(Y)[V] - V sym(Y^T grad f(Y))) given the
/// Euclidean gradient at Y.
Matrix riemannian_hessian(const StiefelProblem& problem, const Matrix& y, const Matrix& euclidean_grad,
                          const Matrix& v);

/// thin_qr of a rows x cols matrix with U[-0.5, 0.5) entries.
Matrix random_stiefel(RngStream& rng, int rows, int cols);

/// Riemannian trust-region with a truncated CG (Steihaug-Toint) inner solver.
SolveReport rtr_solve(const StiefelProblem& problem, const std::optional<Matrix>& init, const TrustRegionConfig& config);

}  // namespace flagstat
