#include "flagstat/averaging.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flagstat/error.hpp"

namespace flagstat {

const char* to_string(Method method) noexcept {
  switch (method) {
    case Method::FlagMean: return "FlagMean";
    case Method::FlagMedian: return "FlagMedian";
    case Method::EuclideanMean: return "EuclideanMean";
    case Method::GrMean: return "GrMean";
  }
  return "Unknown";
}

Method method_from_string(std::string_view name) {
  for (Method m : {Method::FlagMean, Method::FlagMedian, Method::EuclideanMean, Method::GrMean}) {
    if (name == to_string(m)) return m;
  }
  throw Error(ErrorKind::InvalidInput, "unknown method '" + std::string(name) + "'");
}

void IrlsConfig::validate() const {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidInput, "IRLS epsilon must be > 0");
  if (max_iterations < 1) throw Error(ErrorKind::InvalidInput, "IRLS max_iterations must be >= 1");
  if (!(convergence_tolerance > 0.0)) throw Error(ErrorKind::InvalidInput, "IRLS tolerance must be > 0");
  inner.validate();
}

namespace {

const FlagSignature& common_signature(std::span<const FlagPoint> points, const WeightVector& weights) {
  if (points.empty()) throw Error(ErrorKind::EmptyInput, "no points to average");
  if (weights.size() != points.size()) {
    throw Error(ErrorKind::InvalidInput, "got " + std::to_string(weights.size()) + " weights for " +
                                             std::to_string(points.size()) + " points");
  }
  require_signature(points, points.front().signature());
  return points.front().signature();
}

}  // namespace

double mean_objective(std::span<const FlagPoint> points, const WeightVector& weights, const FlagPoint& y) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) total += weights[i] * chordal_distance_squared(points[i], y);
  return total;
}

double median_objective(std::span<const FlagPoint> points, const WeightVector& weights, const FlagPoint& y) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) total += weights[i] * chordal_distance(points[i], y);
  return total;
}

AverageReport flag_mean(std::span<const FlagPoint> points, const WeightVector& weights, const TrustRegionConfig& config,
                        const std::optional<Matrix>& init) {
  const FlagSignature& sig = common_signature(points, weights);
  if (points.size() == 1) {
    return AverageReport{points.front(), 0.0, {0.0}, 0, Method::FlagMean};
  }
  const StiefelProblem problem = flag_mean_problem(points, weights);
  SolveReport solved = rtr_solve(problem, init, config);
  FlagPoint centroid = make_flag(std::move(solved.point), sig);
  const double objective = mean_objective(points, weights, centroid);
  return AverageReport{std::move(centroid), objective, std::move(solved.accepted_costs), solved.iterations,
                       Method::FlagMean};
}

WeightVector irls_weights(std::span<const FlagPoint> points, const FlagPoint& y, const WeightVector& base_weights,
                          double epsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidInput, "IRLS epsilon must be > 0");
  if (base_weights.size() != points.size()) throw Error(ErrorKind::InvalidInput, "weight count differs from point count");
  std::vector<double> w(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    w[i] = base_weights[i] / std::max(chordal_distance(points[i], y), epsilon);
  }
  return WeightVector(std::move(w));
}

AverageReport flag_median(std::span<const FlagPoint> points, const WeightVector& weights, const IrlsConfig& config) {
  config.validate();
  const FlagSignature& sig = common_signature(points, weights);
  if (points.size() == 1) {
    return AverageReport{points.front(), 0.0, {0.0}, 0, Method::FlagMedian};
  }

  FlagPoint current = config.init ? make_flag(*config.init, sig)
                                  : flag_mean(points, WeightVector::uniform(points.size()), config.inner).centroid;
  double f = median_objective(points, weights, current);
  AverageReport report{current, f, {f}, 0, Method::FlagMedian};

  for (int iteration = 1; iteration <= config.max_iterations; ++iteration) {
    const WeightVector w = irls_weights(points, current, weights, config.epsilon);
    // The minimizer is invariant to a common weight scale; normalizing keeps
    // the absolute gradient tolerance meaningful when distances are tiny.
    std::vector<double> normalized = w.values();
    const double total = w.sum();
    for (double& v : normalized) v /= total;

    const StiefelProblem problem = flag_mean_problem(points, WeightVector(std::move(normalized)));
    SolveReport solved = rtr_solve(problem, current.rep(), config.inner);
    current = make_flag(std::move(solved.point), sig);

    const double f_next = median_objective(points, weights, current);
    report.objective_history.push_back(f_next);
    report.iterations = iteration;
    const bool converged = std::abs(f - f_next) < config.convergence_tolerance;
    f = f_next;
    if (converged) break;
  }
  report.centroid = current;
  report.objective = f;
  return report;
}

AverageReport euclidean_mean_baseline(std::span<const FlagPoint> points, const WeightVector& weights) {
  const FlagSignature& sig = common_signature(points, weights);
  if (points.size() == 1) {
    return AverageReport{points.front(), 0.0, {0.0}, 0, Method::EuclideanMean};
  }
  Matrix average = Matrix::Zero(sig.ambient(), sig.rank());
  for (std::size_t i = 0; i < points.size(); ++i) average += weights[i] * points[i].rep();
  average /= weights.sum();
  FlagPoint centroid = make_flag(thin_qr(average).q, sig);
  const double objective = mean_objective(points, weights, centroid);
  return AverageReport{std::move(centroid), objective, {objective}, 1, Method::EuclideanMean};
}

AverageReport gr_mean_baseline(std::span<const FlagPoint> points, const WeightVector& weights) {
  const FlagSignature& sig = common_signature(points, weights);
  const int d = sig.ambient();
  const int k = sig.rank();
  Matrix scatter = Matrix::Zero(d, d);
  for (std::size_t i = 0; i < points.size(); ++i) {
    scatter.noalias() += weights[i] * (points[i].rep() * points[i].rep().transpose());
  }
  const EigenPairs eig = sym_eig(sym(scatter));
  std::vector<int> dims(k);
  std::iota(dims.begin(), dims.end(), 1);
  FlagPoint centroid = make_flag(eig.vectors.leftCols(k), FlagSignature(std::move(dims), d));

  // Objective on Gr(d_k, d): sum a_i (d_k - ||X^T Y||_F^2).
  const FlagSignature grassmann = FlagSignature::grassmannian(k, d);
  const FlagPoint as_subspace = with_signature(centroid, grassmann);
  double objective = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    objective += weights[i] * chordal_distance_squared(with_signature(points[i], grassmann), as_subspace);
  }
  return AverageReport{std::move(centroid), objective, {objective}, 1, Method::GrMean};
}

}  // namespace flagstat
