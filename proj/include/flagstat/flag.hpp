#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "flagstat/numerics.hpp"

namespace flagstat {

/// Type (d_1, ..., d_k; d) of a flag. Blocks are indexed from 0 here, so block
/// j holds columns [offset(j), offset(j) + size(j)) of a representative.
class FlagSignature {
 public:
  /// Throws InvalidInput unless 0 < d_1 < ... < d_k < ambient.
  FlagSignature(std::vector<int> dims, int ambient);

  /// (1, 2, ..., d - 1; d).
  static FlagSignature complete(int ambient);
  /// (k; d), the Grassmannian Gr(k, d).
  static FlagSignature grassmannian(int k, int ambient);

  const std::vector<int>& dims() const noexcept { return dims_; }
  int ambient() const noexcept { return ambient_; }
  int depth() const noexcept { return static_cast<int>(dims_.size()); }
  /// d_k, the number of columns of a representative.
  int rank() const noexcept { return dims_.back(); }

  int block_offset(int j) const;
  int block_size(int j) const;

  bool is_complete() const noexcept;

  /// "(1,3;10)".
  std::string to_string() const;

  friend bool operator==(const FlagSignature&, const FlagSignature&) = default;

 private:
  std::vector<int> dims_;
  int ambient_;
};

/// A flag [[X]] stored through an orthonormal d x d_k representative.
/// Immutable once built; construct through make_flag.
class FlagPoint {
 public:
  const FlagSignature& signature() const noexcept { return signature_; }
  const Matrix& rep() const noexcept { return rep_; }

  friend FlagPoint make_flag(Matrix rep, FlagSignature signature);

 private:
  FlagPoint(FlagSignature signature, Matrix rep) : signature_(std::move(signature)), rep_(std::move(rep)) {}

  FlagSignature signature_;
  Matrix rep_;
};

/// Tolerance on ||rep^T rep - I||_max accepted by make_flag.
inline constexpr double kOrthonormalityTolerance = 1e-10;

/// Validates shape (ShapeMismatch), finiteness and orthonormality
/// (NotOrthonormal, with the measured deviation in the message).
FlagPoint make_flag(Matrix rep, FlagSignature signature);

/// Same representative read under another signature with equal d and d_k.
FlagPoint with_signature(const FlagPoint& x, FlagSignature signature);

/// Nonnegative weights, at least one strictly positive.
class WeightVector {
 public:
  explicit WeightVector(std::vector<double> weights);
  static WeightVector uniform(std::size_t count);

  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  const std::vector<double>& values() const noexcept { return weights_; }
  double sum() const noexcept;

 private:
  std::vector<double> weights_;
};

/// X_j, the columns of block j (0-based).
Matrix block(const FlagPoint& x, int j);

/// I_j: d_k x d_k diagonal selector of block j.
Matrix indicator(const FlagSignature& signature, int j);

/// Chordal distance sqrt(sum_j m_j - tr(X_j^T Y_j Y_j^T X_j)).
///
/// The radicand is evaluated as the symmetrized sum of squared projection
/// residuals ||(I - Y_j Y_j^T) X_j||_F^2, which equals the trace form for
/// orthonormal inputs but stays nonnegative and keeps full relative accuracy
/// near zero distance.
double chordal_distance(const FlagPoint& x, const FlagPoint& y);

/// Squared chordal distance, same evaluation as chordal_distance.
double chordal_distance_squared(const FlagPoint& x, const FlagPoint& y);

/// Throws SignatureMismatch unless every point carries `signature`.
void require_signature(std::span<const FlagPoint> points, const FlagSignature& signature);

/// Sign-corrects each column of a complete-type flag so it agrees with the
/// Euclidean mean of the matching data columns (z_j^T mu_j >= 0).
FlagPoint orient_complete_flag(const FlagPoint& mu, std::span<const FlagPoint> data);

}  // namespace flagstat
