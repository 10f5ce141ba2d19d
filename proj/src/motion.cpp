#include "flagstat/motion.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "flagstat/error.hpp"

namespace flagstat {

namespace {

double so_deviation(const Eigen::MatrixXd& m) {
  return std::max(orthonormality_error(m), std::abs(m.determinant() - 1.0));
}

}  // namespace

RigidMotion::RigidMotion(const Matrix3& rotation, const Vector3& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation.allFinite() || !translation.allFinite()) throw Error(ErrorKind::InvalidInput, "motion has non-finite entries");
  const double deviation = so_deviation(rotation);
  if (deviation > kGroupTolerance) {
    std::ostringstream msg;
    msg << "rotation is not in SO(3) (deviation " << deviation << ")";
    throw Error(ErrorKind::InvalidInput, msg.str());
  }
}

RigidMotion RigidMotion::identity() { return RigidMotion(Matrix3::Identity(), Vector3::Zero()); }

SpecialOrthogonal4::SpecialOrthogonal4(const Matrix4& m) : m_(m) {
  if (!m.allFinite()) throw Error(ErrorKind::InvalidInput, "SO(4) matrix has non-finite entries");
  const double deviation = so_deviation(m);
  if (deviation > kGroupTolerance) {
    std::ostringstream msg;
    msg << "matrix is not in SO(4) (deviation " << deviation << ")";
    throw Error(ErrorKind::InvalidInput, msg.str());
  }
}

ContractionParam::ContractionParam(double lambda) : lambda_(lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error(ErrorKind::InvalidInput, "lambda must be a positive number");
}

SpecialOrthogonal4 contract(const RigidMotion& g, const ContractionParam& lambda) {
  Matrix4 a = Matrix4::Identity();
  a.topLeftCorner<3, 3>() = g.rotation();
  a.topRightCorner<3, 1>() = g.translation() / lambda.value();
  const SvdFactors f = svd(a, true);
  return SpecialOrthogonal4(f.u * f.v.transpose());
}

Matrix3 project_to_so3(const Matrix3& m) {
  const SvdFactors f = svd(m, true);
  Matrix3 u = f.u;
  if ((u * f.v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return u * f.v.transpose();
}

RigidMotion expand(const SpecialOrthogonal4& so4, const ContractionParam& lambda, std::optional<double> small_t_threshold) {
  const Matrix4& m = so4.matrix();
  const double m44 = m(3, 3);
  if (std::abs(m44) < 1e-12) {
    throw Error(ErrorKind::ContractionSingularity, "M_44 vanishes; the motion sits at the contraction horizon");
  }
  const double threshold = small_t_threshold.value_or(1e-9 * lambda.value());
  const Vector3 t = (2.0 * lambda.value() / m44) * m.topRightCorner<3, 1>();
  const Matrix3 upper = m.topLeftCorner<3, 3>();

  Matrix3 r;
  const double t_norm = t.norm();
  if (t_norm < threshold) {
    r = upper;
  } else {
    // P' projects onto the complement of t: right singular vectors 2..3 of t^T.
    const SvdFactors f = svd(t.transpose(), true);
    const Eigen::MatrixXd complement = f.v.rightCols(2);
    const Matrix3 stretch = m44 * (t * t.transpose()) / (t_norm * t_norm) + complement * complement.transpose();
    const Eigen::FullPivLU<Matrix3> lu(stretch);
    if (!lu.isInvertible()) throw Error(ErrorKind::NumericalFailure, "expansion operator is singular");
    r = lu.solve(upper);
  }
  if (!r.allFinite() || !t.allFinite()) throw Error(ErrorKind::NumericalFailure, "expansion produced non-finite values");

  const double deviation = so_deviation(r);
  if (deviation > 1e-6) {
    std::ostringstream msg;
    msg << "expanded rotation leaves SO(3) by " << deviation;
    throw Error(ErrorKind::NumericalFailure, msg.str());
  }
  if (deviation > kGroupTolerance) r = project_to_so3(r);
  return RigidMotion(r, t);
}

FlagPoint so4_to_flag(const SpecialOrthogonal4& m) {
  return make_flag(m.matrix().leftCols<3>(), FlagSignature({1, 2, 3}, 4));
}

SpecialOrthogonal4 flag_to_so4(const FlagPoint& x) {
  if (!(x.signature() == FlagSignature({1, 2, 3}, 4))) {
    throw Error(ErrorKind::UnsupportedSignature, "expected a flag of type (1,2,3;4), got " + x.signature().to_string());
  }
  const Eigen::MatrixXd& b = x.rep();
  const Matrix4 complement = Matrix4::Identity() - b * b.transpose();
  for (int seed : {3, 2, 1, 0}) {
    Eigen::Vector4d z = complement.col(seed);
    const double norm = z.norm();
    if (norm < 1e-12) continue;
    Matrix4 m;
    m.leftCols<3>() = b;
    m.col(3) = z / norm;
    if (m.determinant() < 0.0) m.col(3) *= -1.0;
    return SpecialOrthogonal4(m);
  }
  throw Error(ErrorKind::NumericalFailure, "could not complete the frame to SO(4)");
}

double rotation_angle(const Matrix3& r) {
  const double cos_theta = 0.5 * (r.trace() - 1.0);
  const Vector3 axis(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double sin_theta = 0.5 * axis.norm();
  return std::atan2(sin_theta, std::clamp(cos_theta, -1.0, 1.0));
}

double pose_error(const RigidMotion& a, const RigidMotion& b, const PoseErrorConfig& config) {
  if (!(config.lambda_t > 0.0)) throw Error(ErrorKind::InvalidInput, "lambda_t must be > 0");
  const double angle = rotation_angle(a.rotation().transpose() * b.rotation());
  return angle / std::numbers::pi + config.lambda_t * (a.translation() - b.translation()).norm();
}

Matrix3 axis_angle_rotation(const Vector3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

Matrix3 random_rotation(RngStream& rng) {
  for (;;) {
    try {
      Matrix3 q = thin_qr(gaussian_matrix(rng, 3, 3)).q;
      if (q.determinant() < 0.0) q.col(2) *= -1.0;
      return q;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::RankDeficient) throw;
    }
  }
}

MotionAverage average_motions(std::span<const RigidMotion> motions, const WeightVector& weights, int q,
                              const ContractionParam& lambda, const MotionAverageConfig& config) {
  if (motions.empty()) throw Error(ErrorKind::EmptyInput, "no motions to average");
  if (q != 1 && q != 2) throw Error(ErrorKind::InvalidInput, "q must be 1 (median) or 2 (mean)");
  if (weights.size() != motions.size()) throw Error(ErrorKind::InvalidInput, "weight count differs from motion count");

  std::vector<FlagPoint> flags;
  flags.reserve(motions.size());
  for (const RigidMotion& g : motions) flags.push_back(so4_to_flag(contract(g, lambda)));

  AverageReport report = q == 2 ? flag_mean(flags, weights, config.mean) : flag_median(flags, weights, config.median);
  report.centroid = orient_complete_flag(report.centroid, flags);
  SpecialOrthogonal4 m = flag_to_so4(report.centroid);
  RigidMotion g = expand(m, lambda, config.small_t_threshold);
  return MotionAverage{std::move(g), std::move(m), std::move(report)};
}

Matrix3 average_rotations(std::span<const Matrix3> rotations, const WeightVector& weights, int q,
                          const MotionAverageConfig& config) {
  std::vector<RigidMotion> motions;
  motions.reserve(rotations.size());
  for (const Matrix3& r : rotations) motions.emplace_back(r, Vector3::Zero());
  return average_motions(motions, weights, q, ContractionParam(1.0), config).motion.rotation();
}

}  // namespace flagstat
