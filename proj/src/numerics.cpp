#include "flagstat/numerics.hpp"

#include <cmath>
#include <string>

#include "flagstat/error.hpp"

namespace flagstat {

double max_abs(const Matrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

double orthonormality_error(const Matrix& a) {
  const Matrix gram = a.transpose() * a;
  return max_abs(gram - Matrix::Identity(gram.rows(), gram.cols()));
}

Matrix sym(const Matrix& a) { return 0.5 * (a + a.transpose()); }

double inner(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

bool all_finite(const Matrix& a) { return a.allFinite(); }

void require_finite(const Matrix& a, std::string_view what) {
  if (!a.allFinite()) {
    throw Error(ErrorKind::NumericalFailure, std::string(what) + " has non-finite entries");
  }
}

QrFactors thin_qr(const Matrix& a) {
  const Eigen::Index d = a.rows();
  const Eigen::Index k = a.cols();
  if (k == 0 || d < k) {
    throw Error(ErrorKind::ShapeMismatch, "thin_qr needs rows >= cols >= 1, got " + std::to_string(d) +
                                              "x" + std::to_string(k));
  }
  require_finite(a, "thin_qr input");

  const Eigen::HouseholderQR<Matrix> qr(a);
  QrFactors out;
  out.q = qr.householderQ() * Matrix::Identity(d, k);
  out.r = qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();

  const double scale = a.colwise().norm().maxCoeff();
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!(std::abs(out.r(i, i)) > 1e-12 * scale)) {
      throw Error(ErrorKind::RankDeficient, "column " + std::to_string(i) + " is linearly dependent (|R_ii| = " +
                                                std::to_string(std::abs(out.r(i, i))) + ")");
    }
    if (out.r(i, i) < 0.0) {
      out.r.row(i) *= -1.0;
      out.q.col(i) *= -1.0;
    }
  }
  return out;
}

SvdFactors svd(const Matrix& a, bool full) {
  require_finite(a, "svd input");
  const unsigned options = full ? (Eigen::ComputeFullU | Eigen::ComputeFullV) : (Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::JacobiSVD<Matrix> solver(a, options);
  SvdFactors out{solver.matrixU(), solver.singularValues(), solver.matrixV()};
  if (!out.u.allFinite() || !out.v.allFinite() || !out.singular_values.allFinite()) {
    throw Error(ErrorKind::NumericalFailure, "svd did not converge");
  }
  return out;
}

EigenPairs sym_eig(const Matrix& s) {
  if (s.rows() != s.cols()) {
    throw Error(ErrorKind::InvalidInput, "sym_eig needs a square matrix");
  }
  require_finite(s, "sym_eig input");
  const double scale = max_abs(s);
  if (max_abs(s - s.transpose()) > 1e-10 * scale) {
    throw Error(ErrorKind::InvalidInput, "sym_eig input is not symmetric");
  }
  const Eigen::SelfAdjointEigenSolver<Matrix> solver(sym(s));
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::NumericalFailure, "symmetric eigensolver did not converge");
  }
  const Eigen::Index n = s.rows();
  EigenPairs out{Vector(n), Matrix(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    // Eigen returns ascending order.
    out.values(i) = solver.eigenvalues()(n - 1 - i);
    Vector v = solver.eigenvectors().col(n - 1 - i);
    Eigen::Index pivot = 0;
    v.cwiseAbs().maxCoeff(&pivot);
    if (v(pivot) < 0.0) v = -v;
    out.vectors.col(i) = v;
  }
  return out;
}

Matrix uniform_matrix(RngStream& rng, Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(lo, hi);
  return m;
}

Matrix gaussian_matrix(RngStream& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

}  // namespace flagstat
