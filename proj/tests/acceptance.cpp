// Runs the ten acceptance criteria and prints one PASS/FAIL line per criterion.
// Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "flagstat/averaging.hpp"
#include "flagstat/flag.hpp"
#include "flagstat/motion.hpp"
#include "flagstat/numerics.hpp"
#include "flagstat/rng.hpp"
#include "flagstat/stiefel.hpp"
#include "flagstat/synthlab.hpp"

using namespace flagstat;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

void note(Outcome& o, const std::string& s) {
  if (!o.detail.empty()) o.detail += "; ";
  o.detail += s;
}

void fail(Outcome& o, const std::string& s) {
  o.pass = false;
  note(o, s);
}

// Tables shared between criteria; computed once.
struct Runs {
  std::optional<ResultTable> accuracy, outliers, motion_noise, motion_outliers;
};
Runs runs;

const ResultTable& accuracy_run() {
  if (!runs.accuracy) runs.accuracy = run_experiment(preset("flag-accuracy"));
  return *runs.accuracy;
}
const ResultTable& outlier_sweep() {
  if (!runs.outliers) runs.outliers = run_experiment(preset("flag-outliers"));
  return *runs.outliers;
}
const ResultTable& motion_noise() {
  if (!runs.motion_noise) runs.motion_noise = run_experiment(preset("motion-noise"));
  return *runs.motion_noise;
}
const ResultTable& motion_outliers() {
  if (!runs.motion_outliers) runs.motion_outliers = run_experiment(preset("motion-outliers"));
  return *runs.motion_outliers;
}

void require_all_ok(Outcome& o, const ResultTable& t) {
  std::size_t failed = 0;
  for (const ResultRow& r : t.rows) failed += r.status != "ok";
  if (failed) fail(o, std::to_string(failed) + " trial(s) errored");
}

Outcome flag_accuracy() {
  Outcome o;
  const ResultTable& t = accuracy_run();
  require_all_ok(o, t);
  const AggregateRow a = t.aggregate_for(0, Method::FlagMean);
  note(o, "mean d_c " + fmt("%.3e", a.error_mean) + " (bound 5e-4)");
  note(o, "mean objective " + fmt("%.3e", a.objective_mean) + " (bound 1e-3)");
  note(o, "max RTR iterations " + std::to_string(a.iterations_max) + " (bound 5)");
  if (a.succeeded != 50) fail(o, "expected 50 solves");
  if (!(a.error_mean <= 5e-4)) fail(o, "distance bound missed");
  if (!(a.objective_mean <= 1e-3)) fail(o, "objective bound missed");
  if (a.iterations_max > 5) fail(o, "iteration bound missed");
  return o;
}

Outcome robustness_ordering() {
  Outcome o;
  const ResultTable& t = outlier_sweep();
  require_all_ok(o, t);
  for (std::size_t c = 0; c < t.cells.size(); ++c) {
    const double m = t.cells[c].at("outliers");
    const double med = t.aggregate_for(c, Method::FlagMedian).error_mean;
    const double mean = t.aggregate_for(c, Method::FlagMean).error_mean;
    const double euc = t.aggregate_for(c, Method::EuclideanMean).error_mean;
    const double gr = t.aggregate_for(c, Method::GrMean).error_mean;
    char buf[160];
    std::snprintf(buf, sizeof buf, "m=%g median %.3g mean %.3g euclid %.3g gr %.3g", m, med, mean, euc, gr);
    note(o, buf);
    if (m >= 10 && !(med <= mean && mean <= euc && mean <= gr)) fail(o, "ordering violated at m=" + fmt("%g", m));
  }
  return o;
}

Outcome grassmannian_oracle() {
  Outcome o;
  RngStream rng(77, 3);
  double worst = 0.0;
  for (int problem = 0; problem < 100; ++problem) {
    const int d = 2 + static_cast<int>(rng.next_u64() % 19);
    const int k = 1 + static_cast<int>(rng.next_u64() % std::min(4, d - 1));
    const int p = 1 + static_cast<int>(rng.next_u64() % 30);
    const FlagSignature sig = FlagSignature::grassmannian(k, d);
    std::vector<FlagPoint> pts;
    std::vector<double> w;
    for (int i = 0; i < p; ++i) {
      pts.push_back(make_flag(random_stiefel(rng, d, k), sig));
      w.push_back(rng.uniform(0.1, 2.0));
    }
    const WeightVector weights(w);
    TrustRegionConfig cfg;
    cfg.rng = rng.split(problem);
    const AverageReport mean = flag_mean(pts, weights, cfg);

    Matrix s = Matrix::Zero(d, d);
    for (int i = 0; i < p; ++i) s += w[i] * pts[i].rep() * pts[i].rep().transpose();
    const EigenPairs eig = sym_eig(s);
    // Skip instances whose top-k subspace is not unique.
    if (k < d && eig.values(k - 1) - eig.values(k) < 1e-6 * std::max(1.0, eig.values(0))) continue;
    const FlagPoint oracle = make_flag(eig.vectors.leftCols(k), sig);
    worst = std::max(worst, chordal_distance(mean.centroid, oracle));
  }
  note(o, "worst d_c to eigenvector span " + fmt("%.3e", worst) + " (bound 1e-7)");
  if (!(worst <= 1e-7)) fail(o, "span mismatch");
  return o;
}

Outcome irls_descent() {
  Outcome o;
  const IrlsConfig defaults;
  std::size_t runs_checked = 0;
  double worst_rise = -1e300;
  int worst_iters = 0;
  for (const ResultTable* t : {&accuracy_run(), &outlier_sweep()}) {
    for (const ResultRow& r : t->rows) {
      if (r.method != Method::FlagMedian || r.status != "ok") continue;
      ++runs_checked;
      const auto& h = r.objective_history;
      const double p = 100.0;  // both sweeps use 100 points
      for (std::size_t i = 1; i < h.size(); ++i) {
        worst_rise = std::max(worst_rise, h[i] - h[i - 1]);
        if (h[i] > h[i - 1] + p * defaults.epsilon / 2) fail(o, "objective rose by " + fmt("%.3e", h[i] - h[i - 1]));
      }
      worst_iters = std::max(worst_iters, r.iterations);
      const bool cauchy = h.size() >= 2 && std::abs(h.back() - h[h.size() - 2]) < defaults.convergence_tolerance;
      if (!cauchy || r.iterations > 50) fail(o, "run did not converge within 50 iterations");
    }
  }
  note(o, std::to_string(runs_checked) + " median runs, largest step change " + fmt("%.3e", worst_rise) +
              ", max iterations " + std::to_string(worst_iters));
  if (runs_checked == 0) fail(o, "no runs");
  return o;
}

double line_angle(const FlagPoint& x) { return std::atan2(x.rep()(1, 0), x.rep()(0, 0)); }

double angle_gap(double a, double b) {
  double g = std::fmod(std::abs(a - b), std::numbers::pi);
  return std::min(g, std::numbers::pi - g);
}

Outcome median_grid_oracle() {
  Outcome o;
  RngStream rng(5, 5);
  const FlagSignature sig({1}, 2);
  double worst = 0.0;
  for (int instance = 0; instance < 50; ++instance) {
    const int p = 3 + static_cast<int>(rng.next_u64() % 3);
    std::vector<double> theta(p);
    std::vector<FlagPoint> pts;
    for (int i = 0; i < p; ++i) {
      theta[i] = rng.uniform(0.0, std::numbers::pi);
      Matrix x(2, 1);
      x << std::cos(theta[i]), std::sin(theta[i]);
      pts.push_back(make_flag(x, sig));
    }
    // For lines in the plane d_c = |sin(angle difference)|.
    double best = 0.0, best_f = 1e300;
    for (double a = 0.0; a < std::numbers::pi; a += 1e-4) {
      double f = 0.0;
      for (double t : theta) f += std::abs(std::sin(a - t));
      if (f < best_f) { best_f = f; best = a; }
    }
    IrlsConfig cfg;
    cfg.inner.rng = rng.split(instance);
    const AverageReport med = flag_median(pts, WeightVector::uniform(p), cfg);
    worst = std::max(worst, angle_gap(line_angle(med.centroid), best));
  }
  note(o, "worst angle gap " + fmt("%.3e", worst) + " rad (bound 2e-4)");
  if (!(worst <= 2e-4)) fail(o, "IRLS median away from grid minimum");
  return o;
}

Outcome derivative_checks() {
  Outcome o;
  RngStream rng(6, 6);
  double worst_g = 0.0, worst_h = 0.0;
  const std::vector<FlagSignature> sigs = {FlagSignature({1, 3}, 10), FlagSignature({1, 2, 3}, 10),
                                           FlagSignature({2, 5}, 7), FlagSignature({4}, 9)};
  for (int problem = 0; problem < 20; ++problem) {
    const FlagSignature& sig = sigs[problem % sigs.size()];
    std::vector<FlagPoint> pts;
    std::vector<double> w;
    for (int i = 0; i < 6; ++i) {
      pts.push_back(make_flag(random_stiefel(rng, sig.ambient(), sig.rank()), sig));
      w.push_back(rng.uniform(0.2, 1.5));
    }
    const StiefelProblem prob = flag_mean_problem(pts, WeightVector(w));
    const Matrix y = random_stiefel(rng, prob.rows, prob.cols);
    const Matrix eg = prob.euclidean_gradient(y);
    const Matrix g = riemannian_gradient(prob, y);
    for (int dir = 0; dir < 20; ++dir) {
      Matrix v = tangent_project(y, gaussian_matrix(rng, prob.rows, prob.cols));
      v /= v.norm();
      const double h = 1e-6;
      const double fd = (prob.cost(retract(y, h * v)) - prob.cost(retract(y, -h * v))) / (2 * h);
      const double exact = inner(g, v);
      worst_g = std::max(worst_g, std::abs(fd - exact) / std::max(std::abs(exact), 1e-8 + g.norm()));

      const double t = 1e-5;
      const Matrix yp = retract(y, t * v), ym = retract(y, -t * v);
      const Matrix gp = riemannian_gradient(prob, yp);
      const Matrix gm = riemannian_gradient(prob, ym);
      const Matrix hfd = tangent_project(y, (gp - gm) / (2 * t));
      const Matrix hv = riemannian_hessian(prob, y, eg, v);
      worst_h = std::max(worst_h, (hfd - hv).norm() / std::max(hv.norm(), 1e-8));
    }
  }
  note(o, "gradient rel. error " + fmt("%.2e", worst_g) + " (bound 1e-5)");
  note(o, "Hessian rel. error " + fmt("%.2e", worst_h) + " (bound 1e-4)");
  if (!(worst_g < 1e-5)) fail(o, "gradient check");
  if (!(worst_h < 1e-4)) fail(o, "Hessian check");
  return o;
}

Outcome round_trips() {
  Outcome o;
  RngStream rng(7, 7);
  double worst_r = 0.0, worst_t = 0.0, worst_f = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double lambda = std::exp(rng.uniform(std::log(0.01), std::log(100.0)));
    Vector3 dir(rng.normal(), rng.normal(), rng.normal());
    dir.normalize();
    const RigidMotion g(random_rotation(rng), lambda * rng.uniform() * dir);
    const RigidMotion back = expand(contract(g, ContractionParam(lambda)), ContractionParam(lambda));
    worst_r = std::max(worst_r, rotation_angle(g.rotation().transpose() * back.rotation()));
    worst_t = std::max(worst_t, (g.translation() - back.translation()).norm());
  }
  for (int i = 0; i < 1000; ++i) {
    Matrix q = thin_qr(gaussian_matrix(rng, 4, 4)).q;
    if (q.determinant() < 0) q.col(3) *= -1.0;
    const SpecialOrthogonal4 m(q);
    worst_f = std::max(worst_f, max_abs(flag_to_so4(so4_to_flag(m)).matrix() - m.matrix()));
  }
  note(o, "SE(3) rotation " + fmt("%.2e", worst_r) + ", translation " + fmt("%.2e", worst_t) + " (bound 1e-8)");
  note(o, "SO(4) flag round trip " + fmt("%.2e", worst_f) + " (bound 1e-10)");
  if (!(worst_r <= 1e-8 && worst_t <= 1e-8)) fail(o, "contraction round trip");
  if (!(worst_f <= 1e-10)) fail(o, "flag round trip");
  return o;
}

bool nondecreasing_but_one(const std::vector<double>& v) {
  int violations = 0;
  for (std::size_t i = 1; i < v.size(); ++i) violations += v[i] < v[i - 1];
  return violations <= 1;
}

Outcome motion_averaging() {
  Outcome o;
  const ResultTable& noise = motion_noise();
  const ResultTable& out = motion_outliers();
  require_all_ok(o, noise);
  require_all_ok(o, out);

  double zero_worst = 0.0;
  for (const ResultRow& r : noise.rows) {
    if (r.cell == 0) zero_worst = std::max(zero_worst, r.error);
  }
  note(o, "(a) zero-noise worst pose error " + fmt("%.2e", zero_worst));
  if (!(zero_worst <= 1e-6)) fail(o, "(a) zero-noise recovery");

  std::string b = "(b)";
  for (std::size_t c = 0; c < out.cells.size(); ++c) {
    const double f = out.cells[c].at("outlier_fraction");
    const double med = out.aggregate_for(c, Method::FlagMedian).error_mean;
    const double mean = out.aggregate_for(c, Method::FlagMean).error_mean;
    char buf[96];
    std::snprintf(buf, sizeof buf, " f=%g %.3g/%.3g", f, med, mean);
    b += buf;
    if (f >= 0.2 && !(med <= mean)) fail(o, "(b) median worse than mean at fraction " + fmt("%g", f));
  }
  note(o, b + " (median/mean)");

  for (Method m : {Method::FlagMean, Method::FlagMedian}) {
    std::vector<double> curve;
    std::string c = std::string("(c) ") + to_string(m);
    for (std::size_t i = 0; i < noise.cells.size(); ++i) {
      curve.push_back(noise.aggregate_for(i, m).error_mean);
      c += fmt(" %.3g", curve.back());
    }
    note(o, c);
    if (!nondecreasing_but_one(curve)) fail(o, std::string("(c) ") + to_string(m) + " not monotone in noise");
  }
  return o;
}

Outcome lambda_ablation() {
  Outcome o;
  const ResultTable t = run_experiment(preset("lambda"));
  require_all_ok(o, t);
  std::size_t at_one = 0;
  for (std::size_t c = 0; c < t.cells.size(); ++c)
    if (t.cells[c].at("lambda") == 1.0) at_one = c;
  for (Method m : {Method::FlagMean, Method::FlagMedian}) {
    std::size_t best = 0;
    std::string curve = std::string(to_string(m)) + ":";
    for (std::size_t c = 0; c < t.cells.size(); ++c) {
      const double e = t.aggregate_for(c, m).error_mean;
      curve += fmt(" %.4g", e);
      if (e < t.aggregate_for(best, m).error_mean) best = c;
    }
    note(o, curve + " argmin lambda=" + fmt("%g", t.cells[best].at("lambda")));
    const std::size_t gap = best > at_one ? best - at_one : at_one - best;
    if (gap > 1) fail(o, std::string(to_string(m)) + " minimum not within one grid step of lambda=1");
  }
  return o;
}

Outcome determinism() {
  Outcome o;
  for (const char* name : {"flag-accuracy", "flag-outliers", "motion-noise", "motion-outliers"}) {
    ExperimentConfig cfg = preset(name);
    const std::string first = std::string(name) == "flag-accuracy"          ? accuracy_run().to_csv()
                              : std::string(name) == "flag-outliers" ? outlier_sweep().to_csv()
                              : std::string(name) == "motion-noise"  ? motion_noise().to_csv()
                                                                     : motion_outliers().to_csv();
    cfg.threads = 2;
    const std::string second = run_experiment(cfg).to_csv();
    if (first != second) fail(o, std::string(name) + " CSV differs on rerun");
  }
  note(o, "reran flag-accuracy, flag-outliers, motion-noise, motion-outliers with 2 worker threads");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "flag-mean accuracy on FL(1,2,3;10)", flag_accuracy},
      {2, "robustness ordering under outliers", robustness_ordering},
      {3, "Grassmannian eigenvector oracle", grassmannian_oracle},
      {4, "IRLS descent and convergence", irls_descent},
      {5, "median grid-search oracle on FL(1;2)", median_grid_oracle},
      {6, "gradient and Hessian finite differences", derivative_checks},
      {7, "contraction and SO(4) round trips", round_trips},
      {8, "motion averaging sweeps", motion_averaging},
      {9, "lambda ablation", lambda_ablation},
      {10, "byte-identical reruns", determinism},
  };
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::printf("[%s] %2d %s (%.1fs): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
