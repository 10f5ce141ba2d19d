#include "flagstat/flag.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "flagstat/error.hpp"

namespace flagstat {

FlagSignature::FlagSignature(std::vector<int> dims, int ambient) : dims_(std::move(dims)), ambient_(ambient) {
  if (dims_.empty()) throw Error(ErrorKind::InvalidInput, "flag signature needs at least one dimension");
  int previous = 0;
  for (int d : dims_) {
    if (d <= previous) throw Error(ErrorKind::InvalidInput, "signature dims must be positive and strictly increasing");
    previous = d;
  }
  if (previous >= ambient_) {
    throw Error(ErrorKind::InvalidInput, "largest signature dim must be below the ambient dimension");
  }
}

FlagSignature FlagSignature::complete(int ambient) {
  std::vector<int> dims(ambient > 1 ? ambient - 1 : 0);
  std::iota(dims.begin(), dims.end(), 1);
  return FlagSignature(std::move(dims), ambient);
}

FlagSignature FlagSignature::grassmannian(int k, int ambient) { return FlagSignature({k}, ambient); }

int FlagSignature::block_offset(int j) const {
  if (j < 0 || j >= depth()) throw Error(ErrorKind::IndexOutOfRange, "block index " + std::to_string(j));
  return j == 0 ? 0 : dims_[j - 1];
}

int FlagSignature::block_size(int j) const {
  const int offset = block_offset(j);
  return dims_[j] - offset;
}

bool FlagSignature::is_complete() const noexcept {
  if (rank() != ambient_ - 1) return false;
  for (int j = 0; j < depth(); ++j)
    if (dims_[j] != j + 1) return false;
  return true;
}

std::string FlagSignature::to_string() const {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < dims_.size(); ++i) out << (i ? "," : "") << dims_[i];
  out << ';' << ambient_ << ')';
  return out.str();
}

FlagPoint make_flag(Matrix rep, FlagSignature signature) {
  if (rep.rows() != signature.ambient() || rep.cols() != signature.rank()) {
    throw Error(ErrorKind::ShapeMismatch, "representative is " + std::to_string(rep.rows()) + "x" +
                                              std::to_string(rep.cols()) + ", signature " + signature.to_string() +
                                              " needs " + std::to_string(signature.ambient()) + "x" +
                                              std::to_string(signature.rank()));
  }
  if (!rep.allFinite()) throw Error(ErrorKind::NotOrthonormal, "representative has non-finite entries");
  const double deviation = orthonormality_error(rep);
  if (deviation > kOrthonormalityTolerance) {
    std::ostringstream msg;
    msg << "representative columns deviate from orthonormality by " << deviation;
    throw Error(ErrorKind::NotOrthonormal, msg.str());
  }
  return FlagPoint(std::move(signature), std::move(rep));
}

FlagPoint with_signature(const FlagPoint& x, FlagSignature signature) { return make_flag(x.rep(), std::move(signature)); }

WeightVector::WeightVector(std::vector<double> weights) : weights_(std::move(weights)) {
  bool positive = false;
  for (double w : weights_) {
    if (!std::isfinite(w) || w < 0.0) throw Error(ErrorKind::InvalidInput, "weights must be finite and nonnegative");
    positive = positive || w > 0.0;
  }
  if (!positive) throw Error(ErrorKind::InvalidInput, "at least one weight must be positive");
}

WeightVector WeightVector::uniform(std::size_t count) { return WeightVector(std::vector<double>(count, 1.0)); }

double WeightVector::sum() const noexcept { return std::accumulate(weights_.begin(), weights_.end(), 0.0); }

Matrix block(const FlagPoint& x, int j) {
  const FlagSignature& sig = x.signature();
  return x.rep().middleCols(sig.block_offset(j), sig.block_size(j));
}

Matrix indicator(const FlagSignature& signature, int j) {
  const int offset = signature.block_offset(j);
  Matrix out = Matrix::Zero(signature.rank(), signature.rank());
  for (int i = offset; i < signature.dims()[j]; ++i) out(i, i) = 1.0;
  return out;
}

void require_signature(std::span<const FlagPoint> points, const FlagSignature& signature) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].signature() == signature)) {
      throw Error(ErrorKind::SignatureMismatch, "point " + std::to_string(i) + " has signature " +
                                                    points[i].signature().to_string() + ", expected " +
                                                    signature.to_string());
    }
  }
}

double chordal_distance_squared(const FlagPoint& x, const FlagPoint& y) {
  if (!(x.signature() == y.signature())) {
    throw Error(ErrorKind::SignatureMismatch,
                "chordal distance between " + x.signature().to_string() + " and " + y.signature().to_string());
  }
  if (x.rep() == y.rep()) return 0.0;
  const FlagSignature& sig = x.signature();
  const Matrix& xr = x.rep();
  const Matrix& yr = y.rep();
  const int d = sig.ambient();
  // Explicit loops keep the result bitwise symmetric under swapping x and y.
  double forward = 0.0;
  double backward = 0.0;
  for (int j = 0; j < sig.depth(); ++j) {
    const int off = sig.block_offset(j);
    const int m = sig.block_size(j);
    Matrix cross(m, m);  // cross(a, b) = <y_a, x_b>
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) {
        double s = 0.0;
        for (int i = 0; i < d; ++i) s += yr(i, off + a) * xr(i, off + b);
        cross(a, b) = s;
      }
    }
    for (int i = 0; i < d; ++i) {
      for (int c = 0; c < m; ++c) {
        double rf = xr(i, off + c);
        double rb = yr(i, off + c);
        for (int a = 0; a < m; ++a) {
          rf -= yr(i, off + a) * cross(a, c);
          rb -= xr(i, off + a) * cross(c, a);
        }
        forward += rf * rf;
        backward += rb * rb;
      }
    }
  }
  const double radicand = 0.5 * (forward + backward);
  if (!std::isfinite(radicand)) throw Error(ErrorKind::NumericalFailure, "chordal distance is not finite");
  return radicand;
}

double chordal_distance(const FlagPoint& x, const FlagPoint& y) { return std::sqrt(chordal_distance_squared(x, y)); }

FlagPoint orient_complete_flag(const FlagPoint& mu, std::span<const FlagPoint> data) {
  const FlagSignature& sig = mu.signature();
  if (!sig.is_complete()) {
    throw Error(ErrorKind::UnsupportedSignature, "orientation is defined for complete flags only, got " + sig.to_string());
  }
  if (data.empty()) throw Error(ErrorKind::EmptyInput, "orientation needs at least one data point");
  require_signature(data, sig);

  Matrix column_mean = Matrix::Zero(sig.ambient(), sig.rank());
  for (const FlagPoint& x : data) column_mean += x.rep();
  column_mean /= static_cast<double>(data.size());

  Matrix oriented = mu.rep();
  for (int j = 0; j < sig.rank(); ++j) {
    if (column_mean.col(j).dot(oriented.col(j)) < 0.0) oriented.col(j) *= -1.0;
  }
  return make_flag(std::move(oriented), sig);
}

}  // namespace flagstat
