#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "flagstat/averaging.hpp"
#include "flagstat/flag.hpp"
#include "flagstat/rng.hpp"

namespace flagstat {

using Matrix3 = Eigen::Matrix3d;
using Matrix4 = Eigen::Matrix4d;
using Vector3 = Eigen::Vector3d;

/// Tolerance for the R^T R = I and det R = +1 checks.
inline constexpr double kGroupTolerance = 1e-10;

/// Rigid motion (R, t) in SE(3).
class RigidMotion {
 public:
  /// Throws InvalidInput unless R is in SO(3) within kGroupTolerance.
  RigidMotion(const Matrix3& rotation, const Vector3& translation);
  static RigidMotion identity();

  const Matrix3& rotation() const noexcept { return rotation_; }
  const Vector3& translation() const noexcept { return translation_; }

 private:
  Matrix3 rotation_;
  Vector3 translation_;
};

class SpecialOrthogonal4 {
 public:
  /// Throws InvalidInput unless M is in SO(4) within kGroupTolerance.
  explicit SpecialOrthogonal4(const Matrix4& m);
  const Matrix4& matrix() const noexcept { return m_; }

 private:
  Matrix4 m_;
};

/// Scene scale lambda > 0 used by the contraction.
class ContractionParam {
 public:
  explicit ContractionParam(double lambda);
  double value() const noexcept { return lambda_; }

 private:
  double lambda_;
};

struct PoseErrorConfig {
  /// Weight per scene unit on the translation term; must be > 0.
  double lambda_t = 1.0;
};

/// Polar factor of [[R, t/lambda], [0, 1]] from its SVD, U V^T.
SpecialOrthogonal4 contract(const RigidMotion& g, const ContractionParam& lambda);

/// Inverse contraction. `small_t_threshold` defaults to 1e-9 * lambda.
/// Throws ContractionSingularity when |M_44| < 1e-12.
RigidMotion expand(const SpecialOrthogonal4& m, const ContractionParam& lambda,
                   std::optional<double> small_t_threshold = std::nullopt);

/// First three columns of M as a point of FL(1,2,3;4).
FlagPoint so4_to_flag(const SpecialOrthogonal4& m);

/// Completes [m1 m2 m3] with the unit vector of their orthogonal complement,
/// signed so that det = +1.
SpecialOrthogonal4 flag_to_so4(const FlagPoint& x);

/// (1/pi) * angle(R_a^T R_b) + lambda_t * ||t_a - t_b||.
double pose_error(const RigidMotion& a, const RigidMotion& b, const PoseErrorConfig& config = {});

/// Rotation angle in [0, pi], evaluated as atan2(sin, cos) so it stays
/// accurate at both ends of the range.
double rotation_angle(const Matrix3& r);

/// Nearest rotation (polar factor with det fixed to +1).
Matrix3 project_to_so3(const Matrix3& m);

/// Rotation by `angle` radians about the unit `axis`.
Matrix3 axis_angle_rotation(const Vector3& axis, double angle);

/// Haar-distributed rotation: QR of a Gaussian 3x3 with the determinant fixed.
Matrix3 random_rotation(RngStream& rng);

struct MotionAverageConfig {
  TrustRegionConfig mean;
  IrlsConfig median;
  std::optional<double> small_t_threshold;
};

struct MotionAverage {
  RigidMotion motion;
  SpecialOrthogonal4 contracted;
  AverageReport report;
};

/// Contract, embed in FL(1,2,3;4), average with the flag-mean (q = 2) or
/// flag-median (q = 1), re-orient, complete to SO(4) and expand back.
MotionAverage average_motions(std::span<const RigidMotion> motions, const WeightVector& weights, int q,
                              const ContractionParam& lambda, const MotionAverageConfig& config = {});

/// average_motions with zero translations and lambda = 1; returns the rotation.
Matrix3 average_rotations(std::span<const Matrix3> rotations, const WeightVector& weights, int q,
                          const MotionAverageConfig& config = {});

}  // namespace flagstat
