#pragma once

#include <string_view>

#include <Eigen/Dense>

#include "flagstat/rng.hpp"

namespace flagstat {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Thin QR factors with a nonnegative diagonal on R.
struct QrFactors {
  Matrix q;  // d x k, orthonormal columns
  Matrix r;  // k x k, upper triangular
};

/// A = U diag(s) V^T, singular values nonincreasing.
struct SvdFactors {
  Matrix u;
  Vector singular_values;
  Matrix v;
};

/// Eigenpairs of a symmetric matrix, values descending, vectors as columns.
struct EigenPairs {
  Vector values;
  Matrix vectors;
};

/// Householder thin QR of a d x k matrix (d >= k). Columns of Q and rows of R
/// are sign-flipped so diag(R) >= 0. Throws RankDeficient naming the first
/// column whose |R_ii| falls below 1e-12 times the largest column norm.
QrFactors thin_qr(const Matrix& a);

/// Jacobi SVD. Thin factors by default; `full` returns square U and V.
SvdFactors svd(const Matrix& a, bool full = false);

/// Symmetric eigendecomposition. Each eigenvector is signed so that its
/// largest-magnitude entry is positive. Throws InvalidInput when
/// ||S - S^T||_max > 1e-10 ||S||_max.
EigenPairs sym_eig(const Matrix& s);

double max_abs(const Matrix& a);

/// ||A^T A - I||_max.
double orthonormality_error(const Matrix& a);

/// (A + A^T) / 2.
Matrix sym(const Matrix& a);

/// Frobenius inner product tr(A^T B).
double inner(const Matrix& a, const Matrix& b);

bool all_finite(const Matrix& a);

/// Throws NumericalFailure if any entry is NaN or infinite.
void require_finite(const Matrix& a, std::string_view what);

/// Entries drawn from U[lo, hi) in column-major order.
Matrix uniform_matrix(RngStream& rng, Eigen::Index rows, Eigen::Index cols, double lo, double hi);

/// Entries drawn from N(0, 1) in column-major order.
Matrix gaussian_matrix(RngStream& rng, Eigen::Index rows, Eigen::Index cols);

}  // namespace flagstat
