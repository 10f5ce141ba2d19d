#include "cli.hpp"

#include <cstdlib>
#include <numbers>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "flagstat/averaging.hpp"
#include "flagstat/error.hpp"
#include "flagstat/io.hpp"
#include "flagstat/motion.hpp"
#include "flagstat/synthlab.hpp"
#include "json.hpp"
#include "svg.hpp"

namespace flagstat::cli {

namespace {

using nlohmann::json;

struct Options {
  std::string input;
  std::string input_b;
  std::string weights;
  std::string signature;
  std::string out;
  std::string plot;
  std::string preset;
  std::string config;
  std::optional<double> epsilon;
  std::optional<int> max_iter;
  std::optional<double> tol;
  std::uint64_t seed = 0;
  int q = 2;
  double lambda = 1.0;
  double lambda_t = 1.0;
  std::optional<std::size_t> trials;
  std::optional<std::uint64_t> bench_seed;
};

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NumericalFailure:
    case ErrorKind::ContractionSingularity:
    case ErrorKind::RankDeficient:
      return kSolverError;
    default:
      return kInputError;
  }
}

// "1,2,3" or "(1,2,3;10)". The ambient dimension defaults to the input's.
FlagSignature parse_signature(const std::string& text, int ambient) {
  std::string body = text;
  if (!body.empty() && body.front() == '(') body = body.substr(1);
  if (!body.empty() && body.back() == ')') body.pop_back();
  if (auto semi = body.find(';'); semi != std::string::npos) {
    try {
      ambient = std::stoi(body.substr(semi + 1));
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidInput, "--signature: bad ambient dimension in '" + text + "'");
    }
    body = body.substr(0, semi);
  }
  std::vector<int> dims;
  std::stringstream ss(body);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      dims.push_back(std::stoi(item, &used));
      if (item.find_first_not_of(' ', used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidInput, "--signature: '" + item + "' is not an integer");
    }
  }
  return FlagSignature(dims, ambient);
}

io::FlagSet load_flags(const Options& o, const std::string& path) {
  io::FlagSet set = io::parse_flag_set(io::read_file(path));
  if (!o.signature.empty()) {
    FlagSignature sig = parse_signature(o.signature, set.signature.ambient());
    for (FlagPoint& x : set.points) x = with_signature(x, sig);
    set.signature = sig;
  }
  return set;
}

WeightVector load_weights(const Options& o, std::size_t count) {
  if (o.weights.empty()) return WeightVector::uniform(count);
  WeightVector w = io::parse_weights(io::read_file(o.weights));
  if (w.size() != count) {
    throw Error(ErrorKind::InvalidInput, "weights file has " + std::to_string(w.size()) + " entries for " +
                                             std::to_string(count) + " inputs");
  }
  return w;
}

TrustRegionConfig rtr_config(const Options& o, bool outer) {
  TrustRegionConfig c;
  c.rng = RngStream(o.seed, 0);
  if (outer && o.max_iter) c.max_outer_iterations = *o.max_iter;
  if (outer && o.tol) c.gradient_norm_tolerance = *o.tol;
  return c;
}

IrlsConfig irls_config(const Options& o) {
  IrlsConfig c;
  c.inner = rtr_config(o, false);
  if (o.epsilon) c.epsilon = *o.epsilon;
  if (o.max_iter) c.max_iterations = *o.max_iter;
  if (o.tol) c.convergence_tolerance = *o.tol;
  return c;
}

void emit(const Options& o, std::ostream& out, const std::string& report, const std::string& file_contents) {
  if (!o.out.empty()) io::write_file_atomic(o.out, file_contents);
  out << report;
}

int cmd_average(const Options& o, Method method, std::ostream& out) {
  const io::FlagSet set = load_flags(o, o.input);
  const WeightVector w = load_weights(o, set.points.size());
  const AverageReport r = method == Method::FlagMean ? flag_mean(set.points, w, rtr_config(o, true))
                                                     : flag_median(set.points, w, irls_config(o));
  std::string report = std::string("{\"method\": \"") + to_string(method) + "\", \"objective\": " +
                       format_number(r.objective) + ", \"iterations\": " + std::to_string(r.iterations) +
                       ", \"centroid\": " + io::flag_point_json(r.centroid) + "}\n";
  emit(o, out, report, io::flag_set_json(io::FlagSet{r.centroid.signature(), {r.centroid}}));
  return kOk;
}

const FlagPoint& single_point(const io::FlagSet& set, const std::string& path) {
  if (set.points.size() != 1) {
    throw Error(ErrorKind::InvalidInput, "'" + path + "' holds " + std::to_string(set.points.size()) +
                                             " points; dist needs exactly one");
  }
  return set.points.front();
}

int cmd_dist(const Options& o, std::ostream& out) {
  const io::FlagSet a = load_flags(o, o.input);
  const io::FlagSet b = load_flags(o, o.input_b);
  out << format_number(chordal_distance(single_point(a, o.input), single_point(b, o.input_b))) << '\n';
  return kOk;
}

std::string number_list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_number(v[i]);
  return s + "]";
}

int cmd_motion_avg(const Options& o, std::ostream& out) {
  if (o.q != 1 && o.q != 2) throw Error(ErrorKind::InvalidInput, "--q must be 1 or 2");
  const std::vector<RigidMotion> motions = io::parse_motion_set(io::read_file(o.input));
  const WeightVector w = load_weights(o, motions.size());
  MotionAverageConfig cfg;
  cfg.mean = rtr_config(o, true);
  cfg.median = irls_config(o);
  const ContractionParam lambda(o.lambda);
  const PoseErrorConfig pose{o.lambda_t};
  const MotionAverage avg = average_motions(motions, w, o.q, lambda, cfg);

  std::vector<double> errors;
  for (const RigidMotion& g : motions) errors.push_back(pose_error(g, avg.motion, pose));
  const std::string motion = io::motion_json(avg.motion);
  std::string report = "{\"motion\": " + motion + ", \"q\": " + std::to_string(o.q) +
                       ", \"lambda\": " + format_number(o.lambda) + ", \"objective\": " +
                       format_number(avg.report.objective) + ", \"iterations\": " +
                       std::to_string(avg.report.iterations) + ", \"pose_errors\": " + number_list(errors) + "}\n";
  emit(o, out, report, "{\"motions\": [" + motion + "]}\n");
  return kOk;
}

int cmd_rotation_avg(const Options& o, std::ostream& out) {
  if (o.q != 1 && o.q != 2) throw Error(ErrorKind::InvalidInput, "--q must be 1 or 2");
  const std::vector<RigidMotion> motions = io::parse_motion_set(io::read_file(o.input));
  std::vector<Matrix3> rotations;
  for (const RigidMotion& g : motions) rotations.push_back(g.rotation());
  const WeightVector w = load_weights(o, rotations.size());
  MotionAverageConfig cfg;
  cfg.mean = rtr_config(o, true);
  cfg.median = irls_config(o);
  const Matrix3 r = average_rotations(rotations, w, o.q, cfg);

  std::vector<double> errors;
  for (const Matrix3& ri : rotations) errors.push_back(rotation_angle(ri.transpose() * r) * 180.0 / std::numbers::pi);
  const std::string motion = io::motion_json(RigidMotion(r, Vector3::Zero()));
  std::string report = "{\"motion\": " + motion + ", \"q\": " + std::to_string(o.q) +
                       ", \"angular_errors_deg\": " + number_list(errors) + "}\n";
  emit(o, out, report, "{\"motions\": [" + motion + "]}\n");
  return kOk;
}

ParamMap param_map(const json& obj, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorKind::ParseError, where + " must be an object of numbers");
  ParamMap m;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!it.value().is_number()) throw Error(ErrorKind::ParseError, where + "." + it.key() + " is not a number");
    m[it.key()] = it.value().get<double>();
  }
  return m;
}

// {"kind": ..., "grid": [{...}], "params": {...}, "signature": [...], "ambient": d,
//  "trials": n, "seed": s, "methods": [...]}
ExperimentConfig parse_bench_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, std::string("bench config: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::ParseError, "bench config must be an object");
  try {
    ExperimentConfig c;
    if (!doc.contains("kind")) throw Error(ErrorKind::ParseError, "bench config is missing field 'kind'");
    c.kind = experiment_kind_from_string(doc.at("kind").get<std::string>());
    if (!doc.contains("grid") || !doc.at("grid").is_array()) {
      throw Error(ErrorKind::ParseError, "bench config needs a 'grid' array");
    }
    for (std::size_t i = 0; i < doc.at("grid").size(); ++i) {
      c.grid.push_back(param_map(doc.at("grid")[i], "grid[" + std::to_string(i) + "]"));
    }
    if (doc.contains("params")) c.params = param_map(doc.at("params"), "params");
    if (doc.contains("signature")) {
      if (!doc.contains("ambient")) throw Error(ErrorKind::ParseError, "'signature' needs 'ambient'");
      c.signature = FlagSignature(doc.at("signature").get<std::vector<int>>(), doc.at("ambient").get<int>());
    }
    if (doc.contains("trials")) c.trials = doc.at("trials").get<std::size_t>();
    if (doc.contains("seed")) c.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("methods")) {
      for (const auto& m : doc.at("methods")) c.methods.push_back(method_from_string(m.get<std::string>()));
    }
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("bench config: ") + e.what());
  }
}

unsigned thread_count() {
  const char* env = std::getenv("FLAGSTAT_THREADS");
  if (!env) return 1;
  char* end = nullptr;
  const unsigned long v = std::strtoul(env, &end, 10);
  if (end == env || *end != '\0' || v == 0) throw Error(ErrorKind::InvalidInput, "FLAGSTAT_THREADS must be a positive integer");
  return static_cast<unsigned>(v);
}

int cmd_bench(const Options& o, std::ostream& out) {
  if (o.preset.empty() == o.config.empty()) throw Error(ErrorKind::InvalidInput, "bench needs exactly one of --preset and --config");
  ExperimentConfig cfg = o.preset.empty() ? parse_bench_config(io::read_file(o.config)) : preset(o.preset);
  if (o.trials) cfg.trials = *o.trials;
  if (o.bench_seed) cfg.seed = *o.bench_seed;
  cfg.threads = thread_count();
  const ResultTable table = run_experiment(cfg);
  if (!o.plot.empty()) io::write_file_atomic(o.plot, error_chart_svg(table));
  if (o.out.empty()) {
    out << table.to_csv();
  } else {
    io::write_file_atomic(o.out, table.to_csv());
    out << table.aggregate_csv();
  }
  return kOk;
}

int cmd_validate(const Options& o, std::ostream& out) {
  const std::string text = io::read_file(o.input);
  json probe = json::parse(text, nullptr, false);
  if (probe.is_object() && probe.contains("motions")) {
    const auto motions = io::parse_motion_set(text);
    out << "ok: " << motions.size() << " rigid motion(s)\n";
  } else {
    const io::FlagSet set = load_flags(o, o.input);
    out << "ok: " << set.points.size() << " flag(s) of type " << set.signature.to_string() << '\n';
  }
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Chordal flag averages and rigid-motion averaging", "flagstat"};
  app.require_subcommand(1);
  Options o;

  auto add_solver_flags = [&](CLI::App* sub) {
    sub->add_option("--weights", o.weights, "JSON weights file");
    sub->add_option("--epsilon", o.epsilon, "IRLS distance floor");
    sub->add_option("--max-iter", o.max_iter, "Iteration cap (RTR for means, IRLS for medians)");
    sub->add_option("--tol", o.tol, "Stopping tolerance");
    sub->add_option("--seed", o.seed, "Seed for random initialization");
    sub->add_option("--out", o.out, "Write the result file here");
  };

  auto* mean = app.add_subcommand("mean", "Chordal flag-mean of a flag-set file");
  auto* median = app.add_subcommand("median", "Chordal flag-median of a flag-set file");
  for (auto* sub : {mean, median}) {
    sub->add_option("input", o.input, "Flag-set JSON file")->required();
    sub->add_option("--signature", o.signature, "Reinterpret the input as this type, e.g. 1,3");
    add_solver_flags(sub);
  }

  auto* dist = app.add_subcommand("dist", "Chordal distance between two single-flag files");
  dist->add_option("a", o.input)->required();
  dist->add_option("b", o.input_b)->required();
  dist->add_option("--signature", o.signature);

  auto* motion = app.add_subcommand("motion-avg", "Average rigid motions through SO(4)");
  auto* rotation = app.add_subcommand("rotation-avg", "Average the rotations of a motion file");
  for (auto* sub : {motion, rotation}) {
    sub->add_option("input", o.input, "Motion-set JSON file")->required();
    sub->add_option("--q", o.q, "1 for the median, 2 for the mean");
    add_solver_flags(sub);
  }
  motion->add_option("--lambda", o.lambda, "Contraction scale");
  motion->add_option("--lambda-t", o.lambda_t, "Translation weight in the pose error");

  auto* bench = app.add_subcommand("bench", "Run a synthetic sweep and write a CSV table");
  bench->add_option("--preset", o.preset, "Named sweep")->check(CLI::IsMember(preset_names()));
  bench->add_option("--config", o.config, "Experiment JSON file");
  bench->add_option("--trials", o.trials);
  bench->add_option("--seed", o.bench_seed);
  bench->add_option("--out", o.out, "CSV path; the aggregate table goes to stdout");
  bench->add_option("--plot", o.plot, "SVG path");

  auto* validate = app.add_subcommand("validate", "Check that a flag-set or motion-set file is well formed");
  validate->add_option("input", o.input)->required();
  validate->add_option("--signature", o.signature);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (mean->parsed()) return cmd_average(o, Method::FlagMean, out);
    if (median->parsed()) return cmd_average(o, Method::FlagMedian, out);
    if (dist->parsed()) return cmd_dist(o, out);
    if (motion->parsed()) return cmd_motion_avg(o, out);
    if (rotation->parsed()) return cmd_rotation_avg(o, out);
    if (bench->parsed()) return cmd_bench(o, out);
    if (validate->parsed()) return cmd_validate(o, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kSolverError;
  }
  return kInputError;
}

}  // namespace flagstat::cli
