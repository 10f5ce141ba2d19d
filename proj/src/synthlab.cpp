#include "flagstat/synthlab.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <thread>

#include "flagstat/error.hpp"

namespace flagstat {

namespace {

constexpr int kMaxDrawAttempts = 8;

FlagPoint perturbed_flag(const Matrix& center, double noise, const FlagSignature& sig, RngStream& rng) {
  for (int attempt = 0;; ++attempt) {
    try {
      const Matrix z = uniform_matrix(rng, center.rows(), center.cols(), -0.5, 0.5);
      return make_flag(thin_qr(center + noise * z).q, sig);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::RankDeficient || attempt + 1 >= kMaxDrawAttempts) throw;
    }
  }
}

Vector3 uniform_unit_vector(RngStream& rng) {
  for (;;) {
    const Vector3 v(rng.normal(), rng.normal(), rng.normal());
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

Vector3 uniform_in_ball(RngStream& rng, double radius) {
  return radius * std::cbrt(rng.uniform()) * uniform_unit_vector(rng);
}

RigidMotion random_motion(RngStream& rng, double scene_radius) {
  const Matrix3 r = random_rotation(rng);
  return RigidMotion(r, uniform_in_ball(rng, scene_radius));
}

}  // namespace

FlagCluster gen_flag_cluster(const FlagClusterSpec& spec) {
  if (spec.count == 0) throw Error(ErrorKind::EmptyInput, "cluster needs at least one point");
  if (spec.outlier_count > spec.count) throw Error(ErrorKind::InvalidInput, "more outliers than points");
  if (!(spec.noise >= 0.0) || !(spec.outlier_noise >= 0.0)) throw Error(ErrorKind::InvalidInput, "noise must be >= 0");
  const FlagSignature& sig = spec.signature;
  RngStream rng = spec.rng;

  std::optional<FlagPoint> center;
  for (int attempt = 0; !center; ++attempt) {
    try {
      center = make_flag(thin_qr(uniform_matrix(rng, sig.ambient(), sig.rank(), -0.5, 0.5)).q, sig);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::RankDeficient || attempt + 1 >= kMaxDrawAttempts) throw;
    }
  }

  FlagCluster out{*center, {}};
  out.points.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    const double noise = i < spec.count - spec.outlier_count ? spec.noise : spec.outlier_noise;
    out.points.push_back(perturbed_flag(center->rep(), noise, sig, rng));
  }
  return out;
}

MotionCluster gen_motion_cluster(const MotionClusterSpec& spec) {
  if (spec.count == 0) throw Error(ErrorKind::EmptyInput, "cluster needs at least one motion");
  if (!(spec.axis_noise_deg >= 0.0) || !(spec.translation_noise >= 0.0)) {
    throw Error(ErrorKind::InvalidInput, "noise levels must be >= 0");
  }
  if (!(spec.outlier_fraction >= 0.0 && spec.outlier_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidInput, "outlier fraction must lie in [0, 1)");
  }
  if (!(spec.scene_radius > 0.0)) throw Error(ErrorKind::InvalidInput, "scene radius must be > 0");

  RngStream rng = spec.rng;
  MotionCluster out{random_motion(rng, spec.scene_radius), {}, 0};
  out.outlier_count = static_cast<std::size_t>(std::llround(spec.outlier_fraction * static_cast<double>(spec.count)));
  const std::size_t inliers = spec.count - out.outlier_count;
  const double sigma = spec.axis_noise_deg * std::numbers::pi / 180.0;

  out.motions.reserve(spec.count);
  for (std::size_t i = 0; i < inliers; ++i) {
    const Vector3 axis = uniform_unit_vector(rng);
    const double angle = sigma * rng.normal();
    const Vector3 shift(rng.normal(), rng.normal(), rng.normal());
    Matrix3 r = out.center.rotation() * axis_angle_rotation(axis, angle);
    if (angle == 0.0) r = out.center.rotation();
    out.motions.emplace_back(r, out.center.translation() + spec.translation_noise * shift);
  }
  for (std::size_t i = 0; i < out.outlier_count; ++i) out.motions.push_back(random_motion(rng, spec.scene_radius));
  return out;
}

const char* to_string(ExperimentKind kind) noexcept {
  switch (kind) {
    case ExperimentKind::FlagNoiseSweep: return "FlagNoiseSweep";
    case ExperimentKind::FlagOutlierSweep: return "FlagOutlierSweep";
    case ExperimentKind::InitAblation: return "InitAblation";
    case ExperimentKind::MotionNoiseSweep: return "MotionNoiseSweep";
    case ExperimentKind::MotionOutlierSweep: return "MotionOutlierSweep";
    case ExperimentKind::LambdaAblation: return "LambdaAblation";
    case ExperimentKind::RotationNoiseSweep: return "RotationNoiseSweep";
  }
  return "Unknown";
}

ExperimentKind experiment_kind_from_string(std::string_view name) {
  for (ExperimentKind k : {ExperimentKind::FlagNoiseSweep, ExperimentKind::FlagOutlierSweep, ExperimentKind::InitAblation,
                           ExperimentKind::MotionNoiseSweep, ExperimentKind::MotionOutlierSweep,
                           ExperimentKind::LambdaAblation, ExperimentKind::RotationNoiseSweep}) {
    if (name == to_string(k)) return k;
  }
  throw Error(ErrorKind::InvalidInput, "unknown experiment kind '" + std::string(name) + "'");
}

namespace {

bool is_flag_kind(ExperimentKind kind) {
  return kind == ExperimentKind::FlagNoiseSweep || kind == ExperimentKind::FlagOutlierSweep ||
         kind == ExperimentKind::InitAblation;
}

ParamMap kind_defaults(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::FlagNoiseSweep:
      return {{"points", 100}, {"delta", 0.001}, {"outliers", 0}, {"delta_out", 1.0}, {"fixed_dataset", 0}};
    case ExperimentKind::FlagOutlierSweep:
      return {{"points", 100}, {"delta", 0.001}, {"outliers", 0}, {"delta_out", 1.0}, {"fixed_dataset", 0}};
    case ExperimentKind::InitAblation:
      return {{"points", 100}, {"delta", 0.2}, {"outliers", 0}, {"delta_out", 1.0}, {"fixed_dataset", 1},
              {"delta_init", 0.0}};
    case ExperimentKind::MotionNoiseSweep:
    case ExperimentKind::MotionOutlierSweep:
    case ExperimentKind::LambdaAblation:
    case ExperimentKind::RotationNoiseSweep:
      return {{"points", 400}, {"axis_noise_deg", 0.0}, {"translation_noise", 0.0}, {"outlier_fraction", 0.0},
              {"scene_radius", 1.0}, {"lambda", 1.0}, {"lambda_t", 1.0}, {"fixed_dataset", 0}};
  }
  return {};
}

FlagSignature default_signature(ExperimentKind kind) {
  return kind == ExperimentKind::InitAblation ? FlagSignature({1, 2, 3}, 10) : FlagSignature({1, 3}, 10);
}

std::vector<Method> default_methods(ExperimentKind kind) {
  if (kind == ExperimentKind::FlagNoiseSweep || kind == ExperimentKind::FlagOutlierSweep) {
    return {Method::FlagMean, Method::FlagMedian, Method::EuclideanMean, Method::GrMean};
  }
  return {Method::FlagMean, Method::FlagMedian};
}

const std::vector<std::string>& known_keys(ExperimentKind kind) {
  static const std::vector<std::string> flag_keys = {"points", "delta", "outliers", "delta_out", "fixed_dataset",
                                                     "delta_init", "epsilon", "max_iter", "tol"};
  static const std::vector<std::string> motion_keys = {"points", "axis_noise_deg", "translation_noise",
                                                       "outlier_fraction", "scene_radius", "lambda", "lambda_t",
                                                       "fixed_dataset", "epsilon", "max_iter", "tol"};
  return is_flag_kind(kind) ? flag_keys : motion_keys;
}

struct TrialContext {
  const ExperimentConfig& config;
  const std::vector<Method>& methods;
  std::size_t cell;
  std::size_t trial;
  ParamMap params;
};

std::size_t as_count(double v, const char* key) {
  if (!(v >= 0.0) || v != std::floor(v)) throw Error(ErrorKind::InvalidInput, std::string(key) + " must be a whole number >= 0");
  return static_cast<std::size_t>(v);
}

IrlsConfig irls_from(const ParamMap& params, const TrustRegionConfig& inner) {
  IrlsConfig cfg;
  cfg.inner = inner;
  if (auto it = params.find("epsilon"); it != params.end()) cfg.epsilon = it->second;
  if (auto it = params.find("max_iter"); it != params.end()) cfg.max_iterations = static_cast<int>(it->second);
  if (auto it = params.find("tol"); it != params.end()) cfg.convergence_tolerance = it->second;
  return cfg;
}

std::uint64_t trial_seed(const ExperimentConfig& config, std::size_t cell, std::size_t trial) {
  return hash_words(config.seed, cell, trial + 1);
}

// Data are shared across trials of a cell with fixed_dataset, and across
// cells of a lambda sweep (lambda only affects the estimator).
RngStream data_stream(const TrialContext& ctx) {
  const bool fixed = ctx.params.at("fixed_dataset") != 0.0;
  const std::size_t cell_key = ctx.config.kind == ExperimentKind::LambdaAblation ? 0 : ctx.cell + 1;
  return RngStream(hash_words(ctx.config.seed, cell_key, fixed ? 0 : ctx.trial + 1), 1);
}

template <class Fn>
void run_method(const TrialContext& ctx, Method method, std::vector<ResultRow>& rows, Fn&& fn) {
  ResultRow row;
  row.cell = ctx.cell;
  row.trial = ctx.trial;
  row.seed = trial_seed(ctx.config, ctx.cell, ctx.trial);
  row.method = method;
  const auto start = std::chrono::steady_clock::now();
  try {
    fn(row);
  } catch (const Error& e) {
    row.status = std::string("error:") + to_string(e.kind());
    row.error = row.objective = std::numeric_limits<double>::quiet_NaN();
  } catch (const std::exception&) {
    row.status = "error:Unknown";
    row.error = row.objective = std::numeric_limits<double>::quiet_NaN();
  }
  if (ctx.config.record_timing) {
    row.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
  rows.push_back(std::move(row));
}

void error_rows(const TrialContext& ctx, const std::string& status, std::vector<ResultRow>& rows) {
  for (Method m : ctx.methods) {
    ResultRow row;
    row.cell = ctx.cell;
    row.trial = ctx.trial;
    row.seed = trial_seed(ctx.config, ctx.cell, ctx.trial);
    row.method = m;
    row.status = status;
    row.error = row.objective = std::numeric_limits<double>::quiet_NaN();
    rows.push_back(std::move(row));
  }
}

std::vector<ResultRow> run_flag_trial(const TrialContext& ctx) {
  std::vector<ResultRow> rows;
  const FlagSignature sig = ctx.config.signature.value_or(default_signature(ctx.config.kind));
  const ParamMap& p = ctx.params;
  RngStream init_rng(trial_seed(ctx.config, ctx.cell, ctx.trial), 2);

  std::optional<FlagCluster> data;
  std::optional<Matrix> init;
  try {
    FlagClusterSpec spec{sig, as_count(p.at("points"), "points"), p.at("delta"), as_count(p.at("outliers"), "outliers"),
                         p.at("delta_out"), data_stream(ctx)};
    data = gen_flag_cluster(spec);
    if (ctx.config.kind == ExperimentKind::InitAblation) {
      const Matrix& c = data->center.rep();
      init = thin_qr(c + p.at("delta_init") * uniform_matrix(init_rng, c.rows(), c.cols(), -0.5, 0.5)).q;
    }
  } catch (const Error& e) {
    error_rows(ctx, std::string("error:") + to_string(e.kind()), rows);
    return rows;
  }

  TrustRegionConfig rtr;
  rtr.rng = init_rng.split(1);
  const IrlsConfig irls = [&] {
    IrlsConfig cfg = irls_from(p, rtr);
    cfg.init = init;
    return cfg;
  }();
  const std::vector<FlagPoint>& points = data->points;
  const WeightVector weights = WeightVector::uniform(points.size());

  for (Method method : ctx.methods) {
    run_method(ctx, method, rows, [&](ResultRow& row) {
      AverageReport report = [&] {
        switch (method) {
          case Method::FlagMean: return flag_mean(points, weights, rtr, init);
          case Method::FlagMedian: return flag_median(points, weights, irls);
          case Method::EuclideanMean: return euclidean_mean_baseline(points, weights);
          case Method::GrMean: return gr_mean_baseline(points, weights);
        }
        throw Error(ErrorKind::InvalidInput, "unsupported method");
      }();
      const FlagPoint estimate = with_signature(report.centroid, sig);
      row.error = chordal_distance(estimate, data->center);
      row.objective = method == Method::FlagMedian ? report.objective : mean_objective(points, weights, estimate);
      row.iterations = report.iterations;
      row.objective_history = std::move(report.objective_history);
    });
  }
  return rows;
}

std::vector<ResultRow> run_motion_trial(const TrialContext& ctx) {
  std::vector<ResultRow> rows;
  const ParamMap& p = ctx.params;
  const bool rotations_only = ctx.config.kind == ExperimentKind::RotationNoiseSweep;

  std::optional<MotionCluster> data;
  try {
    MotionClusterSpec spec;
    spec.count = as_count(p.at("points"), "points");
    spec.axis_noise_deg = p.at("axis_noise_deg");
    spec.translation_noise = rotations_only ? 0.0 : p.at("translation_noise");
    spec.outlier_fraction = p.at("outlier_fraction");
    spec.scene_radius = p.at("scene_radius");
    spec.rng = data_stream(ctx);
    data = gen_motion_cluster(spec);
    if (rotations_only) {
      for (RigidMotion& g : data->motions) g = RigidMotion(g.rotation(), Vector3::Zero());
      data->center = RigidMotion(data->center.rotation(), Vector3::Zero());
    }
  } catch (const Error& e) {
    error_rows(ctx, std::string("error:") + to_string(e.kind()), rows);
    return rows;
  }

  MotionAverageConfig cfg;
  cfg.mean.rng = RngStream(trial_seed(ctx.config, ctx.cell, ctx.trial), 2);
  cfg.median = irls_from(p, cfg.mean);
  const ContractionParam lambda(rotations_only ? 1.0 : p.at("lambda"));
  const PoseErrorConfig pose{p.at("lambda_t")};
  const WeightVector weights = WeightVector::uniform(data->motions.size());

  for (Method method : ctx.methods) {
    run_method(ctx, method, rows, [&](ResultRow& row) {
      if (method != Method::FlagMean && method != Method::FlagMedian) {
        throw Error(ErrorKind::InvalidInput, "motion experiments support FlagMean and FlagMedian only");
      }
      MotionAverage avg = average_motions(data->motions, weights, method == Method::FlagMean ? 2 : 1, lambda, cfg);
      row.error = rotations_only
                      ? rotation_angle(data->center.rotation().transpose() * avg.motion.rotation()) * 180.0 / std::numbers::pi
                      : pose_error(data->center, avg.motion, pose);
      row.objective = avg.report.objective;
      row.iterations = avg.report.iterations;
      row.objective_history = std::move(avg.report.objective_history);
    });
  }
  return rows;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (trials < 1) throw Error(ErrorKind::InvalidInput, "trials must be >= 1");
  if (grid.empty()) throw Error(ErrorKind::InvalidInput, "parameter grid must not be empty");
  const auto& keys = known_keys(kind);
  auto check = [&](const ParamMap& m) {
    for (const auto& [key, value] : m) {
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
        throw Error(ErrorKind::InvalidInput, "parameter '" + key + "' does not apply to " + to_string(kind));
      }
      if (!std::isfinite(value)) throw Error(ErrorKind::InvalidInput, "parameter '" + key + "' is not finite");
    }
  };
  check(params);
  for (const ParamMap& cell : grid) check(cell);
  if (signature && !is_flag_kind(kind)) throw Error(ErrorKind::InvalidInput, "signature applies to flag experiments only");
  if (!is_flag_kind(kind)) {
    for (Method m : methods) {
      if (m != Method::FlagMean && m != Method::FlagMedian) {
        throw Error(ErrorKind::InvalidInput, std::string(to_string(m)) + " is not available for motion experiments");
      }
    }
  }
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string format_params(const ParamMap& params) {
  std::string out;
  for (const auto& [key, value] : params) {
    if (!out.empty()) out += ';';
    out += key + "=" + format_number(value);
  }
  return out;
}

ResultTable run_experiment(const ExperimentConfig& config) {
  config.validate();
  ResultTable table;
  table.kind = config.kind;
  table.cells = config.grid;
  table.methods = config.methods.empty() ? default_methods(config.kind) : config.methods;

  const std::size_t tasks = config.grid.size() * config.trials;
  std::vector<std::vector<ResultRow>> slots(tasks);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t task = next++; task < tasks; task = next++) {
      const std::size_t cell = task / config.trials;
      const std::size_t trial = task % config.trials;
      TrialContext ctx{config, table.methods, cell, trial, kind_defaults(config.kind)};
      for (const auto& [k, v] : config.params) ctx.params[k] = v;
      for (const auto& [k, v] : config.grid[cell]) ctx.params[k] = v;
      slots[task] = is_flag_kind(config.kind) ? run_flag_trial(ctx) : run_motion_trial(ctx);
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(tasks)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  for (auto& slot : slots)
    for (auto& row : slot) table.rows.push_back(std::move(row));
  return table;
}

std::vector<AggregateRow> ResultTable::aggregate() const {
  std::vector<AggregateRow> out;
  for (std::size_t cell = 0; cell < cells.size(); ++cell) {
    for (Method method : methods) {
      AggregateRow agg;
      agg.cell = cell;
      agg.method = method;
      std::vector<const ResultRow*> ok;
      for (const ResultRow& row : rows) {
        if (row.cell != cell || row.method != method) continue;
        if (row.status == "ok") ok.push_back(&row); else ++agg.failed;
      }
      agg.succeeded = ok.size();
      if (!ok.empty()) {
        const double n = static_cast<double>(ok.size());
        for (const ResultRow* r : ok) {
          agg.error_mean += r->error / n;
          agg.objective_mean += r->objective / n;
          agg.iterations_mean += r->iterations / n;
          agg.iterations_max = std::max(agg.iterations_max, r->iterations);
        }
        if (ok.size() > 1) {
          for (const ResultRow* r : ok) {
            agg.error_std += (r->error - agg.error_mean) * (r->error - agg.error_mean);
            agg.objective_std += (r->objective - agg.objective_mean) * (r->objective - agg.objective_mean);
          }
          agg.error_std = std::sqrt(agg.error_std / (n - 1.0));
          agg.objective_std = std::sqrt(agg.objective_std / (n - 1.0));
        }
      }
      out.push_back(agg);
    }
  }
  return out;
}

AggregateRow ResultTable::aggregate_for(std::size_t cell, Method method) const {
  for (const AggregateRow& a : aggregate()) {
    if (a.cell == cell && a.method == method) return a;
  }
  throw Error(ErrorKind::IndexOutOfRange, "no aggregate for that cell and method");
}

std::string ResultTable::to_csv() const {
  std::ostringstream out;
  out << "experiment,params,trial,seed,method,error,objective,iterations,wall_time_ms,status\n";
  for (const ResultRow& row : rows) {
    out << to_string(kind) << ',' << format_params(cells[row.cell]) << ',' << row.trial << ',' << row.seed << ','
        << to_string(row.method) << ',' << format_number(row.error) << ',' << format_number(row.objective) << ','
        << row.iterations << ',' << format_number(row.wall_time_ms) << ',' << row.status << '\n';
  }
  return out.str();
}

std::string ResultTable::aggregate_csv() const {
  std::ostringstream out;
  out << "experiment,params,method,trials,failures,error_mean,error_std,objective_mean,objective_std,iterations_mean\n";
  for (const AggregateRow& a : aggregate()) {
    out << to_string(kind) << ',' << format_params(cells[a.cell]) << ',' << to_string(a.method) << ',' << a.succeeded
        << ',' << a.failed << ',' << format_number(a.error_mean) << ',' << format_number(a.error_std) << ','
        << format_number(a.objective_mean) << ',' << format_number(a.objective_std) << ','
        << format_number(a.iterations_mean) << '\n';
  }
  return out.str();
}

std::vector<std::string> preset_names() {
  return {"flag-accuracy", "flag-noise", "flag-outliers", "init-ablation", "motion-noise", "motion-outliers", "lambda",
          "rotation-noise"};
}

ExperimentConfig preset(std::string_view name) {
  ExperimentConfig c;
  c.seed = 20230601;
  if (name == "flag-accuracy") {
    c.kind = ExperimentKind::FlagNoiseSweep;
    c.signature = FlagSignature({1, 2, 3}, 10);
    c.params = {{"points", 100}, {"fixed_dataset", 1}};
    c.grid = {{{"delta", 0.001}}};
    c.trials = 50;
    c.methods = {Method::FlagMean, Method::FlagMedian};
  } else if (name == "flag-noise") {
    c.kind = ExperimentKind::FlagNoiseSweep;
    for (double d : {0.001, 0.01, 0.1, 0.2, 0.5, 1.0}) c.grid.push_back({{"delta", d}});
    c.trials = 10;
  } else if (name == "flag-outliers") {
    c.kind = ExperimentKind::FlagOutlierSweep;
    for (double m : {0, 10, 20, 30, 40}) c.grid.push_back({{"outliers", m}});
    c.trials = 10;
  } else if (name == "init-ablation") {
    c.kind = ExperimentKind::InitAblation;
    for (double d : {0.0, 0.5, 1.0, 2.0, 4.0, 8.0}) c.grid.push_back({{"delta_init", d}});
    c.trials = 10;
  } else if (name == "motion-noise") {
    c.kind = ExperimentKind::MotionNoiseSweep;
    const double rot[] = {0, 5, 10, 15, 20, 25};
    const double trans[] = {0, 0.02, 0.05, 0.1, 0.2, 0.3};
    for (int i = 0; i < 6; ++i) c.grid.push_back({{"axis_noise_deg", rot[i]}, {"translation_noise", trans[i]}});
    c.trials = 50;
  } else if (name == "motion-outliers") {
    c.kind = ExperimentKind::MotionOutlierSweep;
    c.params = {{"axis_noise_deg", 5}, {"translation_noise", 0.05}};
    for (double f : {0.0, 0.1, 0.2, 0.3, 0.4}) c.grid.push_back({{"outlier_fraction", f}});
    c.trials = 50;
  } else if (name == "lambda") {
    c.kind = ExperimentKind::LambdaAblation;
    c.params = {{"points", 250}, {"axis_noise_deg", 0.075 * 180.0 / std::numbers::pi}, {"translation_noise", 0.15}};
    for (double l : {0.002, 0.025, 0.1, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.8, 2.0, 2.25, 2.5}) c.grid.push_back({{"lambda", l}});
    c.trials = 50;
  } else if (name == "rotation-noise") {
    c.kind = ExperimentKind::RotationNoiseSweep;
    for (double d : {0, 5, 10, 15, 20, 25}) c.grid.push_back({{"axis_noise_deg", d}});
    c.trials = 20;
  } else {
    throw Error(ErrorKind::InvalidInput, "unknown preset '" + std::string(name) + "'");
  }
  return c;
}

}  // namespace flagstat
