#include "flagstat/stiefel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "flagstat/error.hpp"

namespace flagstat {

const char* to_string(Termination t) noexcept {
  return t == Termination::GradientTolerance ? "GradientTolerance" : "MaxIterations";
}

void TrustRegionConfig::validate() const {
  if (max_outer_iterations < 0) throw Error(ErrorKind::InvalidInput, "max_outer_iterations must be >= 0");
  if (!(gradient_norm_tolerance > 0.0)) throw Error(ErrorKind::InvalidInput, "gradient tolerance must be > 0");
  if (initial_radius && !(*initial_radius > 0.0)) throw Error(ErrorKind::InvalidInput, "initial radius must be > 0");
  if (max_radius && !(*max_radius > 0.0)) throw Error(ErrorKind::InvalidInput, "max radius must be > 0");
  if (!(acceptance_threshold > 0.0 && acceptance_threshold < 0.25)) {
    throw Error(ErrorKind::InvalidInput, "acceptance threshold must lie in (0, 0.25)");
  }
  if (max_inner_iterations && *max_inner_iterations < 1) throw Error(ErrorKind::InvalidInput, "max inner iterations must be >= 1");
  if (!(cg_kappa > 0.0) || !(cg_theta > 0.0)) throw Error(ErrorKind::InvalidInput, "CG stopping parameters must be > 0");
}

namespace {

struct FlagMeanData {
  std::vector<Matrix> projections;  // P_j, d x d
  std::vector<int> offsets;
  std::vector<int> sizes;
  double constant = 0.0;            // (sum_i a_i) * sum_j m_j
};

}  // namespace

StiefelProblem flag_mean_problem(std::span<const FlagPoint> points, const WeightVector& weights) {
  if (points.empty()) throw Error(ErrorKind::EmptyInput, "flag mean needs at least one point");
  if (weights.size() != points.size()) {
    throw Error(ErrorKind::InvalidInput, "got " + std::to_string(weights.size()) + " weights for " +
                                             std::to_string(points.size()) + " points");
  }
  const FlagSignature& sig = points.front().signature();
  require_signature(points, sig);

  auto data = std::make_shared<FlagMeanData>();
  const int d = sig.ambient();
  for (int j = 0; j < sig.depth(); ++j) {
    data->offsets.push_back(sig.block_offset(j));
    data->sizes.push_back(sig.block_size(j));
    data->projections.push_back(Matrix::Zero(d, d));
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (weights[i] == 0.0) continue;
    for (int j = 0; j < sig.depth(); ++j) {
      const auto xj = points[i].rep().middleCols(data->offsets[j], data->sizes[j]);
      data->projections[j].noalias() += weights[i] * (xj * xj.transpose());
    }
  }
  data->constant = weights.sum() * sig.rank();

  StiefelProblem problem;
  problem.rows = d;
  problem.cols = sig.rank();
  problem.cost = [data](const Matrix& y) {
    double trace = 0.0;
    for (std::size_t j = 0; j < data->projections.size(); ++j) {
      const auto yj = y.middleCols(data->offsets[j], data->sizes[j]);
      trace += (yj.transpose() * data->projections[j] * yj).trace();
    }
    return data->constant - trace;
  };
  problem.euclidean_gradient = [data](const Matrix& y) {
    Matrix g(y.rows(), y.cols());
    for (std::size_t j = 0; j < data->projections.size(); ++j) {
      g.middleCols(data->offsets[j], data->sizes[j]).noalias() =
          -2.0 * data->projections[j] * y.middleCols(data->offsets[j], data->sizes[j]);
    }
    return g;
  };
  // The cost is quadratic in Y, so the Hessian does not depend on Y.
  problem.euclidean_hessian = [data](const Matrix& /*y*/, const Matrix& v) {
    Matrix h(v.rows(), v.cols());
    for (std::size_t j = 0; j < data->projections.size(); ++j) {
      h.middleCols(data->offsets[j], data->sizes[j]).noalias() =
          -2.0 * data->projections[j] * v.middleCols(data->offsets[j], data->sizes[j]);
    }
    return h;
  };
  return problem;
}

Matrix tangent_project(const Matrix& y, const Matrix& g) {
  if (y.rows() != g.rows() || y.cols() != g.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "tangent_project operands differ in shape");
  }
  return g - y * sym(y.transpose() * g);
}

Matrix retract(const Matrix& y, const Matrix& v) {
  if (y.rows() != v.rows() || y.cols() != v.cols()) throw Error(ErrorKind::ShapeMismatch, "retract operands differ in shape");
  if (v.isZero(0.0)) return y;
  return thin_qr(y + v).q;
}

Matrix riemannian_gradient(const StiefelProblem& problem, const Matrix& y) {
  return tangent_project(y, problem.euclidean_gradient(y));
}

Matrix riemannian_hessian(const StiefelProblem& problem, const Matrix& y, const Matrix& euclidean_grad, const Matrix& v) {
  const Matrix weingarten = v * sym(y.transpose() * euclidean_grad);
  return tangent_project(y, problem.euclidean_hessian(y, v) - weingarten);
}

Matrix random_stiefel(RngStream& rng, int rows, int cols) {
  return thin_qr(uniform_matrix(rng, rows, cols, -0.5, 0.5)).q;
}

namespace {

struct InnerResult {
  Matrix eta;
  Matrix h_eta;
  bool hit_boundary = false;
};

// Steihaug-Toint truncated CG on the tangent space at y.
InnerResult truncated_cg(const StiefelProblem& problem, const Matrix& y, const Matrix& egrad, const Matrix& grad,
                         double radius, int max_inner, double kappa, double theta) {
  InnerResult out{Matrix::Zero(y.rows(), y.cols()), Matrix::Zero(y.rows(), y.cols()), false};

  Matrix r = grad;
  double r_r = inner(r, r);
  const double norm_r0 = std::sqrt(r_r);
  Matrix delta = -r;
  double e_pe = 0.0;
  double e_pd = 0.0;
  double d_pd = r_r;
  double model_value = 0.0;

  for (int j = 0; j < max_inner; ++j) {
    const Matrix h_delta = riemannian_hessian(problem, y, egrad, delta);
    const double d_hd = inner(delta, h_delta);
    const double alpha = r_r / d_hd;
    const double e_pe_new = e_pe + 2.0 * alpha * e_pd + alpha * alpha * d_pd;

    if (d_hd <= 0.0 || e_pe_new >= radius * radius) {
      const double tau = (-e_pd + std::sqrt(e_pd * e_pd + d_pd * (radius * radius - e_pe))) / d_pd;
      out.eta += tau * delta;
      out.h_eta += tau * h_delta;
      out.hit_boundary = true;
      return out;
    }

    Matrix eta_new = out.eta + alpha * delta;
    Matrix h_eta_new = out.h_eta + alpha * h_delta;
    const double model_new = inner(eta_new, grad) + 0.5 * inner(eta_new, h_eta_new);
    if (model_new >= model_value) return out;

    out.eta = std::move(eta_new);
    out.h_eta = std::move(h_eta_new);
    model_value = model_new;
    e_pe = e_pe_new;

    r = tangent_project(y, r + alpha * h_delta);
    const double r_r_old = r_r;
    r_r = inner(r, r);
    const double norm_r = std::sqrt(r_r);
    if (norm_r <= norm_r0 * std::min(std::pow(norm_r0, theta), kappa)) return out;

    const double beta = r_r / r_r_old;
    delta = tangent_project(y, -r + beta * delta);
    e_pd = beta * (e_pd + alpha * d_pd);
    d_pd = r_r + beta * beta * d_pd;
  }
  return out;
}

void require_finite_value(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(ErrorKind::NumericalFailure, std::string(what) + " is not finite");
}

}  // namespace

SolveReport rtr_solve(const StiefelProblem& problem, const std::optional<Matrix>& init, const TrustRegionConfig& config) {
  config.validate();
  const int n = problem.rows;
  const int p = problem.cols;
  if (n <= 0 || p <= 0 || p > n) throw Error(ErrorKind::ShapeMismatch, "Stiefel problem needs rows >= cols >= 1");

  Matrix y;
  if (init) {
    if (init->rows() != n || init->cols() != p) throw Error(ErrorKind::ShapeMismatch, "initial point has the wrong shape");
    if (orthonormality_error(*init) > kOrthonormalityTolerance) {
      throw Error(ErrorKind::NotOrthonormal, "initial point is not orthonormal");
    }
    y = *init;
  } else {
    RngStream rng = config.rng;
    y = random_stiefel(rng, n, p);
  }

  const double max_radius = config.max_radius.value_or(std::sqrt(static_cast<double>(p)));
  double radius = std::min(config.initial_radius.value_or(max_radius / 8.0), max_radius);
  const int max_inner = config.max_inner_iterations.value_or(n * p);
  constexpr double kRhoRegularization = 1e3 * std::numeric_limits<double>::epsilon();

  double f = problem.cost(y);
  require_finite_value(f, "cost");
  Matrix egrad = problem.euclidean_gradient(y);
  require_finite(egrad, "gradient");
  Matrix grad = tangent_project(y, egrad);
  double grad_norm = grad.norm();

  SolveReport report;
  report.accepted_costs.push_back(f);
  int iteration = 0;
  for (;; ++iteration) {
    if (grad_norm <= config.gradient_norm_tolerance) {
      report.termination = Termination::GradientTolerance;
      break;
    }
    if (iteration >= config.max_outer_iterations) {
      report.termination = Termination::MaxIterations;
      break;
    }

    const InnerResult step = truncated_cg(problem, y, egrad, grad, radius, max_inner, config.cg_kappa, config.cg_theta);
    const Matrix candidate = retract(y, step.eta);
    const double f_candidate = problem.cost(candidate);
    require_finite_value(f_candidate, "cost");

    const double regularization = std::max(1.0, std::abs(f)) * kRhoRegularization;
    const double model_decrease = -inner(grad, step.eta) - 0.5 * inner(step.eta, step.h_eta);
    const double rho = (f - f_candidate + regularization) / (model_decrease + regularization);
    const bool model_decreased = model_decrease + regularization >= 0.0;

    if (!model_decreased || !(rho >= 0.25)) {
      radius /= 4.0;
    } else if (rho > 0.75 && step.hit_boundary) {
      radius = std::min(2.0 * radius, max_radius);
    }

    if (model_decreased && rho > config.acceptance_threshold) {
      y = candidate;
      f = f_candidate;
      egrad = problem.euclidean_gradient(y);
      require_finite(egrad, "gradient");
      grad = tangent_project(y, egrad);
      grad_norm = grad.norm();
      report.accepted_costs.push_back(f);
    }
  }

  report.point = std::move(y);
  report.cost = f;
  report.gradient_norm = grad_norm;
  report.iterations = iteration;
  return report;
}

}  // namespace flagstat
