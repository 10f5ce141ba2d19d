#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flagstat/averaging.hpp"
#include "flagstat/flag.hpp"
#include "flagstat/motion.hpp"
#include "flagstat/rng.hpp"

namespace flagstat {

struct FlagClusterSpec {
  FlagSignature signature;
  std::size_t count = 100;
  double noise = 0.001;
  std::size_t outlier_count = 0;
  double outlier_noise = 1.0;
  RngStream rng;
};

struct FlagCluster {
  FlagPoint center;
  /// Inliers first, then the outlier_count outliers.
  std::vector<FlagPoint> points;
};

/// Center C = qf(U[-0.5,0.5)^{d x d_k}); point i = qf(C + noise * Z_i) with
/// Z_i drawn the same way. Rank-deficient draws are retried up to 8 times.
FlagCluster gen_flag_cluster(const FlagClusterSpec& spec);

struct MotionClusterSpec {
  std::size_t count = 400;
  /// Standard deviation of the perturbation angle, in degrees.
  double axis_noise_deg = 0.0;
  /// Standard deviation of each translation component.
  double translation_noise = 0.0;
  double outlier_fraction = 0.0;
  double scene_radius = 1.0;
  RngStream rng;
};

struct MotionCluster {
  RigidMotion center;
  /// Inliers first, then round(outlier_fraction * count) outliers.
  std::vector<RigidMotion> motions;
  std::size_t outlier_count = 0;
};

/// Center: Haar rotation, translation uniform in the scene ball. Inliers:
/// center rotation composed with a rotation about a uniform random axis by an
/// N(0, axis_noise) angle, translation plus isotropic Gaussian noise.
/// Outliers: independent uniform random motions.
MotionCluster gen_motion_cluster(const MotionClusterSpec& spec);

enum class ExperimentKind {
  FlagNoiseSweep,
  FlagOutlierSweep,
  InitAblation,
  MotionNoiseSweep,
  MotionOutlierSweep,
  LambdaAblation,
  RotationNoiseSweep,
};

const char* to_string(ExperimentKind kind) noexcept;
ExperimentKind experiment_kind_from_string(std::string_view name);

using ParamMap = std::map<std::string, double>;

/// Declarative sweep. Effective parameters of a cell are the kind defaults,
/// overridden by `params`, overridden by the cell itself.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::FlagNoiseSweep;
  std::vector<ParamMap> grid;
  ParamMap params;
  /// Data signature for flag experiments; unset uses the kind default.
  std::optional<FlagSignature> signature;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  /// Empty means the kind default.
  std::vector<Method> methods;
  /// Off keeps the table byte-reproducible (wall_time_ms is written as 0).
  bool record_timing = false;
  unsigned threads = 1;

  void validate() const;
};

struct ResultRow {
  std::size_t cell = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  Method method = Method::FlagMean;
  double error = 0.0;
  double objective = 0.0;
  int iterations = 0;
  double wall_time_ms = 0.0;
  /// "ok" or "error:<Kind>".
  std::string status = "ok";
  /// Objective history of the run, kept for convergence checks (not in CSV).
  std::vector<double> objective_history;
};

struct AggregateRow {
  std::size_t cell = 0;
  Method method = Method::FlagMean;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  double error_mean = 0.0;
  double error_std = 0.0;
  double objective_mean = 0.0;
  double objective_std = 0.0;
  double iterations_mean = 0.0;
  int iterations_max = 0;
};

struct ResultTable {
  ExperimentKind kind = ExperimentKind::FlagNoiseSweep;
  std::vector<ParamMap> cells;
  std::vector<Method> methods;
  /// Ordered by (cell, trial, method).
  std::vector<ResultRow> rows;

  /// Mean and sample standard deviation over successful trials.
  std::vector<AggregateRow> aggregate() const;
  AggregateRow aggregate_for(std::size_t cell, Method method) const;

  /// experiment,params,trial,seed,method,error,objective,iterations,wall_time_ms,status
  std::string to_csv() const;
  std::string aggregate_csv() const;
};

/// "key=value;key=value" with 17 significant digits.
std::string format_params(const ParamMap& params);

/// %.17g.
std::string format_number(double value);

ResultTable run_experiment(const ExperimentConfig& config);

/// Named sweeps: flag-accuracy, flag-noise, flag-outliers, init-ablation,
/// motion-noise, motion-outliers, lambda, rotation-noise.
ExperimentConfig preset(std::string_view name);
std::vector<std::string> preset_names();

}  // namespace flagstat
