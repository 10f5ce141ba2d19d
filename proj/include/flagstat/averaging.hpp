#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "flagstat/flag.hpp"
#include "flagstat/stiefel.hpp"

namespace flagstat {

enum class Method { FlagMean, FlagMedian, EuclideanMean, GrMean };

const char* to_string(Method method) noexcept;
/// Inverse of to_string; throws InvalidInput for unknown names.
Method method_from_string(std::string_view name);

struct AverageReport {
  FlagPoint centroid;
  /// Objective at the centroid: sum a_i d_c^2 for the means, sum a_i d_c for
  /// the median.
  double objective = 0.0;
  /// FlagMean: solver cost at each accepted RTR iterate. FlagMedian: median
  /// objective at the initial point and after each IRLS step.
  std::vector<double> objective_history;
  /// RTR outer iterations for FlagMean, IRLS iterations for FlagMedian.
  int iterations = 0;
  Method method = Method::FlagMean;
};

struct IrlsConfig {
  double epsilon = 1e-10;
  int max_iterations = 50;
  double convergence_tolerance = 1e-9;
  TrustRegionConfig inner;
  /// Starting point for the IRLS loop; unset means the unweighted flag-mean.
  std::optional<Matrix> init;

  void validate() const;
};

/// sum_i a_i d_c(X^(i), Y)^2.
double mean_objective(std::span<const FlagPoint> points, const WeightVector& weights, const FlagPoint& y);
/// sum_i a_i d_c(X^(i), Y).
double median_objective(std::span<const FlagPoint> points, const WeightVector& weights, const FlagPoint& y);

/// Chordal flag-mean by RTR on the Stiefel reformulation. A single point is
/// returned as is.
AverageReport flag_mean(std::span<const FlagPoint> points, const WeightVector& weights, const TrustRegionConfig& config,
                        const std::optional<Matrix>& init = std::nullopt);

/// w_i = a_i / max(d_c(X^(i), Y), epsilon).
WeightVector irls_weights(std::span<const FlagPoint> points, const FlagPoint& y, const WeightVector& base_weights,
                          double epsilon);

/// Chordal flag-median by IRLS: each step solves a weighted flag-mean, warm
/// started at the current iterate, until the objective changes by less than
/// the tolerance.
AverageReport flag_median(std::span<const FlagPoint> points, const WeightVector& weights, const IrlsConfig& config);

/// Weighted average of the representatives projected back with thin_qr.
AverageReport euclidean_mean_baseline(std::span<const FlagPoint> points, const WeightVector& weights);

/// Grassmannian mean of the largest subspaces: top-d_k eigenvectors of
/// sum_i a_i X^(i) X^(i)T, returned as a flag of type (1, ..., d_k; d).
AverageReport gr_mean_baseline(std::span<const FlagPoint> points, const WeightVector& weights);

}  // namespace flagstat
