#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>

#include "flagstat/averaging.hpp"
#include "flagstat/error.hpp"
#include "flagstat/synthlab.hpp"
#include "support.hpp"

namespace flagstat {
namespace {

using testing::random_flag;
using testing::random_flags;

std::vector<FlagPoint> cluster(RngStream& rng, const FlagSignature& sig, int count, double noise, int outliers = 0) {
  FlagClusterSpec spec{sig, static_cast<std::size_t>(count), noise, static_cast<std::size_t>(outliers), 1.0,
                       rng.split(rng.next_u64())};
  return gen_flag_cluster(spec).points;
}

FlagPoint line(double angle) {
  Matrix x(2, 1);
  x << std::cos(angle), std::sin(angle);
  return make_flag(x, FlagSignature({1}, 2));
}

double line_gap(const FlagPoint& x, double angle) {
  const double a = std::atan2(x.rep()(1, 0), x.rep()(0, 0));
  const double g = std::fmod(std::abs(a - angle), std::numbers::pi);
  return std::min(g, std::numbers::pi - g);
}

TEST(Method, NamesRoundTrip) {
  for (Method m : {Method::FlagMean, Method::FlagMedian, Method::EuclideanMean, Method::GrMean}) {
    EXPECT_EQ(method_from_string(to_string(m)), m);
  }
  EXPECT_THROW(method_from_string("Karcher"), Error);
}

TEST(FlagMean, SinglePointReturned) {
  RngStream rng(1, 0);
  const std::vector<FlagPoint> pts = {random_flag(rng, FlagSignature({1, 3}, 10))};
  const AverageReport r = flag_mean(pts, WeightVector::uniform(1), {});
  EXPECT_LE(chordal_distance(r.centroid, pts[0]), 1e-8);
  EXPECT_EQ(r.objective, 0.0);
}

TEST(FlagMean, GrassmannianMatchesEigenvectors) {
  RngStream rng(2, 0);
  for (int t = 0; t < 20; ++t) {
    const int k = 1 + t % 3;
    const FlagSignature sig({k}, 8);
    const std::vector<FlagPoint> pts = random_flags(rng, sig, 10);
    TrustRegionConfig cfg;
    cfg.rng = rng.split(t);
    const AverageReport mean = flag_mean(pts, WeightVector::uniform(10), cfg);
    const AverageReport gr = gr_mean_baseline(pts, WeightVector::uniform(10));
    ASSERT_LE(chordal_distance(mean.centroid, with_signature(gr.centroid, sig)), 1e-7);
  }
}

TEST(FlagMean, ObjectiveMatchesSolverCost) {
  RngStream rng(3, 0);
  const FlagSignature sig({1, 2, 3}, 10);
  const std::vector<FlagPoint> pts = cluster(rng, sig, 40, 0.1);
  const AverageReport r = flag_mean(pts, WeightVector::uniform(40), {});
  EXPECT_NEAR(r.objective, r.objective_history.back(), 1e-9);
  EXPECT_NEAR(r.objective, mean_objective(pts, WeightVector::uniform(40), r.centroid), 1e-12);
}

TEST(FlagMean, ClusterCenterRecovered) {
  RngStream rng(4, 0);
  const FlagSignature sig({1, 2, 3}, 10);
  FlagClusterSpec spec{sig, 100, 0.001, 0, 1.0, RngStream(4, 1)};
  const FlagCluster data = gen_flag_cluster(spec);
  const AverageReport r = flag_mean(data.points, WeightVector::uniform(100), {});
  EXPECT_LE(chordal_distance(r.centroid, data.center), 5e-4);
  EXPECT_LE(r.objective, 1e-3);
}

TEST(FlagMeanProperty, WeightScaleInvariance) {
  RngStream rng(5, 0);
  for (int t = 0; t < 100; ++t) {
    const FlagSignature sig({1, 3}, 6);
    const std::vector<FlagPoint> pts = cluster(rng, sig, 8, 0.3);
    std::vector<double> w, scaled;
    const double c = rng.uniform(0.01, 100.0);
    for (int i = 0; i < 8; ++i) {
      w.push_back(rng.uniform(0.1, 1.0));
      scaled.push_back(c * w.back());
    }
    TrustRegionConfig cfg;
    cfg.rng = rng.split(t);
    const AverageReport a = flag_mean(pts, WeightVector(w), cfg);
    const AverageReport b = flag_mean(pts, WeightVector(scaled), cfg);
    ASSERT_LE(chordal_distance(a.centroid, b.centroid), 1e-7);
    ASSERT_NEAR(b.objective, c * a.objective, 1e-9 * std::max(1.0, b.objective));
  }
}

TEST(FlagMeanProperty, PermutationInvariance) {
  RngStream rng(6, 0);
  for (int t = 0; t < 20; ++t) {
    const FlagSignature sig({1, 2, 3}, 7);
    std::vector<FlagPoint> pts = cluster(rng, sig, 12, 0.2, 2);
    TrustRegionConfig cfg;
    cfg.rng = rng.split(t);
    const AverageReport a = flag_mean(pts, WeightVector::uniform(12), cfg);
    IrlsConfig irls;
    irls.inner = cfg;
    const AverageReport ma = flag_median(pts, WeightVector::uniform(12), irls);
    std::reverse(pts.begin(), pts.end());
    std::rotate(pts.begin(), pts.begin() + 5, pts.end());
    const AverageReport b = flag_mean(pts, WeightVector::uniform(12), cfg);
    const AverageReport mb = flag_median(pts, WeightVector::uniform(12), irls);
    ASSERT_LE(chordal_distance(a.centroid, b.centroid), 1e-9);
    ASSERT_LE(chordal_distance(ma.centroid, mb.centroid), 1e-9);
  }
}

TEST(FlagMean, Errors) {
  RngStream rng(7, 0);
  EXPECT_THROW(flag_mean(std::vector<FlagPoint>{}, WeightVector::uniform(1), {}), Error);
  const std::vector<FlagPoint> pts = random_flags(rng, FlagSignature({1, 3}, 10), 3);
  EXPECT_THROW(flag_mean(pts, WeightVector::uniform(2), {}), Error);
}

TEST(IrlsWeights, Formula) {
  const std::vector<FlagPoint> pts = {line(0.0), line(std::asin(0.5))};
  const WeightVector w = irls_weights(pts, line(0.0), WeightVector::uniform(2), 1e-10);
  EXPECT_DOUBLE_EQ(w[0], 1e10);
  EXPECT_NEAR(w[1], 2.0, 1e-12);
}

TEST(IrlsWeights, MatchesDirectEvaluation) {
  RngStream rng(8, 0);
  const FlagSignature sig({2, 3}, 6);
  for (int t = 0; t < 100; ++t) {
    const std::vector<FlagPoint> pts = random_flags(rng, sig, 5);
    const FlagPoint y = random_flag(rng, sig);
    std::vector<double> base;
    for (int i = 0; i < 5; ++i) base.push_back(rng.uniform(0.0, 2.0) + (i == 0));
    const double eps = rng.uniform(1e-6, 0.5);
    const WeightVector w = irls_weights(pts, y, WeightVector(base), eps);
    for (int i = 0; i < 5; ++i) {
      ASSERT_DOUBLE_EQ(w[i], base[i] / std::max(chordal_distance(pts[i], y), eps));
    }
  }
  EXPECT_THROW(irls_weights(random_flags(rng, sig, 2), random_flag(rng, sig), WeightVector::uniform(2), 0.0), Error);
}

TEST(FlagMedian, IdenticalPoints) {
  RngStream rng(9, 0);
  const FlagPoint x = random_flag(rng, FlagSignature({1, 3}, 10));
  const std::vector<FlagPoint> pts(6, x);
  const AverageReport r = flag_median(pts, WeightVector::uniform(6), {});
  EXPECT_LE(chordal_distance(r.centroid, x), 1e-8);
  EXPECT_EQ(r.iterations, 1);
}

TEST(FlagMedian, ThreeLinesMatchGridSearch) {
  const std::vector<double> angles = {0.0, 10.0 * std::numbers::pi / 180, 80.0 * std::numbers::pi / 180};
  std::vector<FlagPoint> pts;
  for (double a : angles) pts.push_back(line(a));
  double best = 0.0, best_f = 1e300;
  for (double a = 0.0; a < std::numbers::pi; a += 1e-4) {
    double f = 0.0;
    for (double t : angles) f += std::abs(std::sin(a - t));
    if (f < best_f) {
      best_f = f;
      best = a;
    }
  }
  const AverageReport r = flag_median(pts, WeightVector::uniform(3), {});
  EXPECT_LE(line_gap(r.centroid, best), 2e-4);
}

TEST(FlagMedian, MoreRobustThanMeanUnderOutliers) {
  RngStream rng(10, 0);
  const FlagSignature sig({1, 3}, 10);
  FlagClusterSpec spec{sig, 100, 0.001, 20, 1.0, RngStream(10, 1)};
  const FlagCluster data = gen_flag_cluster(spec);
  const AverageReport mean = flag_mean(data.points, WeightVector::uniform(100), {});
  const AverageReport median = flag_median(data.points, WeightVector::uniform(100), {});
  EXPECT_LT(chordal_distance(median.centroid, data.center), chordal_distance(mean.centroid, data.center));
}

TEST(FlagMedianProperty, ObjectiveDescendsWithinSlack) {
  RngStream rng(11, 0);
  for (int t = 0; t < 30; ++t) {
    const FlagSignature sig = t % 2 ? FlagSignature({1, 3}, 8) : FlagSignature({1, 2}, 5);
    const int p = 10 + t;
    const std::vector<FlagPoint> pts = cluster(rng, sig, p, rng.uniform(0.01, 1.0), t % 4);
    IrlsConfig cfg;
    cfg.inner.rng = rng.split(t);
    const AverageReport r = flag_median(pts, WeightVector::uniform(p), cfg);
    const auto& h = r.objective_history;
    ASSERT_EQ(h.size(), static_cast<std::size_t>(r.iterations) + 1);
    for (std::size_t i = 1; i < h.size(); ++i) ASSERT_LE(h[i], h[i - 1] + p * cfg.epsilon / 2);
    ASSERT_EQ(r.objective, h.back());
    ASSERT_NEAR(r.objective, median_objective(pts, WeightVector::uniform(p), r.centroid), 1e-12);
  }
}

TEST(FlagMedian, InitOverride) {
  RngStream rng(12, 0);
  const FlagSignature sig({1, 3}, 10);
  const std::vector<FlagPoint> pts = cluster(rng, sig, 30, 0.05);
  IrlsConfig cfg;
  cfg.init = pts[3].rep();
  const AverageReport r = flag_median(pts, WeightVector::uniform(30), cfg);
  EXPECT_EQ(r.objective_history.front(), median_objective(pts, WeightVector::uniform(30), pts[3]));
}

TEST(IrlsConfig, Validation) {
  IrlsConfig c;
  c.epsilon = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.max_iterations = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.convergence_tolerance = -1;
  EXPECT_THROW(c.validate(), Error);
}

TEST(EuclideanMean, IdenticalPoints) {
  RngStream rng(13, 0);
  const FlagPoint x = random_flag(rng, FlagSignature({1, 3}, 10));
  const std::vector<FlagPoint> pts(4, x);
  const AverageReport r = euclidean_mean_baseline(pts, WeightVector::uniform(4));
  EXPECT_LE(max_abs(r.centroid.rep() - x.rep()), 1e-14);
}

TEST(EuclideanMean, AntipodalPairIsRankDeficient) {
  RngStream rng(14, 0);
  const FlagSignature sig({1, 3}, 10);
  const FlagPoint x = random_flag(rng, sig);
  const std::vector<FlagPoint> pts = {x, make_flag(-x.rep(), sig)};
  try {
    euclidean_mean_baseline(pts, WeightVector::uniform(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RankDeficient);
  }
}

TEST(EuclideanMean, OrthonormalAndDeterministic) {
  RngStream rng(15, 0);
  const std::vector<FlagPoint> pts = cluster(rng, FlagSignature({1, 3}, 10), 20, 0.5);
  const AverageReport a = euclidean_mean_baseline(pts, WeightVector::uniform(20));
  const AverageReport b = euclidean_mean_baseline(pts, WeightVector::uniform(20));
  EXPECT_LE(orthonormality_error(a.centroid.rep()), 1e-12);
  EXPECT_TRUE(a.centroid.rep() == b.centroid.rep());
}

TEST(GrMean, SinglePointSpan) {
  RngStream rng(16, 0);
  const FlagSignature sig({1, 3}, 10);
  const std::vector<FlagPoint> pts = {random_flag(rng, sig)};
  const AverageReport r = gr_mean_baseline(pts, WeightVector::uniform(1));
  EXPECT_EQ(r.centroid.signature(), FlagSignature({1, 2, 3}, 10));
  const FlagSignature gr({3}, 10);
  EXPECT_LE(chordal_distance(with_signature(r.centroid, gr), with_signature(pts[0], gr)), 1e-8);
}

TEST(GrMean, LeadingColumnCarriesLargestEigenvalue) {
  RngStream rng(17, 0);
  const std::vector<FlagPoint> pts = cluster(rng, FlagSignature({2, 4}, 9), 15, 0.4);
  const AverageReport r = gr_mean_baseline(pts, WeightVector::uniform(15));
  Matrix s = Matrix::Zero(9, 9);
  for (const FlagPoint& x : pts) s += x.rep() * x.rep().transpose();
  const Matrix q = r.centroid.rep();
  for (int c = 1; c < 4; ++c) {
    EXPECT_GE(q.col(c - 1).dot(s * q.col(c - 1)), q.col(c).dot(s * q.col(c)) - 1e-12);
  }
}

}  // namespace
}  // namespace flagstat
