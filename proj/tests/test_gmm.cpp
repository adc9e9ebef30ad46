#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gmmot/density.hpp"
#include "oracles.hpp"

using namespace gmmot;

namespace {

GaussianMixture one_d(std::initializer_list<double> w, std::initializer_list<double> m,
                      std::initializer_list<double> s) {
  const auto k = static_cast<Eigen::Index>(w.size());
  Vector wv(k);
  Matrix mm(k, 1), ss(k, 1);
  Eigen::Index i = 0;
  for (double x : w) wv[i++] = x;
  i = 0;
  for (double x : m) mm(i++, 0) = x;
  i = 0;
  for (double x : s) ss(i++, 0) = x;
  return {wv, mm, ss};
}

Vector pt(double x) { return Vector::Constant(1, x); }

}  // namespace

TEST(Mixture, ConstructorEnforcesInvariants) {
  EXPECT_THROW(one_d({0.5, 0.6}, {0, 1}, {1, 1}), InvalidInput);
  EXPECT_THROW(one_d({1.2, -0.2}, {0, 1}, {1, 1}), InvalidInput);
  EXPECT_THROW(one_d({0.5, 0.5}, {0, 1}, {1, 0}), InvalidInput);
  Matrix bad_labels(2, 2);
  bad_labels << 0.5, 0.6, 1, 0;
  EXPECT_THROW(one_d({0.5, 0.5}, {0, 1}, {1, 1}).with_labels(bad_labels), InvalidInput);
  EXPECT_THROW(GaussianMixture(Vector::Ones(1), Matrix::Zero(1, 2), Matrix::Ones(1, 3)), InvalidInput);
}

TEST(LogDensity, StandardNormalAtMode) {
  EXPECT_NEAR(log_density(one_d({1}, {0}, {1}), pt(0)), -0.5 * std::log(2 * M_PI), 1e-15);
  EXPECT_NEAR(log_density(one_d({1}, {0}, {1}), pt(0)), -0.9189385, 1e-7);
}

TEST(LogDensity, IdenticalComponentsCollapse) {
  const auto single = one_d({1}, {1.5}, {0.7});
  const auto pair = one_d({0.3, 0.7}, {1.5, 1.5}, {0.7, 0.7});
  for (double x : {-3.0, 0.0, 1.5, 4.2}) EXPECT_NEAR(log_density(pair, pt(x)), log_density(single, pt(x)), 1e-14);
}

TEST(LogDensity, MatchesHighPrecisionScalarOracle) {
  const auto g = one_d({0.5, 0.5}, {0, 10}, {1, 1});
  const long double ref = oracle::log_mix_1d({0.5L, 0.5L}, {0.0L, 10.0L}, {1.0L, 1.0L}, 0.0L);
  EXPECT_NEAR(log_density(g, pt(0)), static_cast<double>(ref), 1e-9);
  EXPECT_NEAR(log_density(g, pt(0)), std::log(0.5) - 0.9189385332046727, 1e-9);
}

TEST(LogDensity, FiniteFarInTheTails) {
  const auto g = one_d({0.5, 0.5}, {0, 10}, {1e-3, 1e-3});
  const double v = log_density(g, pt(1e4));
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_LT(v, -1e13);
}

TEST(LogDensity, DimensionMismatchThrows) {
  EXPECT_THROW(log_density(one_d({1}, {0}, {1}), Vector::Zero(2)), InvalidInput);
  EXPECT_THROW(responsibilities(one_d({1}, {0}, {1}), Vector::Zero(3)), InvalidInput);
}

TEST(Responsibilities, Basics) {
  EXPECT_DOUBLE_EQ(responsibilities(one_d({1}, {0}, {1}), pt(3))[0], 1.0);
  const auto twin = responsibilities(one_d({0.5, 0.5}, {2, 2}, {1, 1}), pt(-1));
  EXPECT_DOUBLE_EQ(twin[0], 0.5);
  EXPECT_DOUBLE_EQ(twin[1], 0.5);
  // likelihood ratio exp(-50)
  const auto far = responsibilities(one_d({0.5, 0.5}, {0, 10}, {1, 1}), pt(0));
  EXPECT_GE(far[0], 1 - 1e-9);
  EXPECT_NEAR(far[1], std::exp(-50.0) / (1 + std::exp(-50.0)), 1e-30);
}

TEST(Responsibilities, AlwaysOnTheSimplex) {
  std::mt19937_64 eng(5);
  std::normal_distribution<double> nd(0.0, 5.0);
  for (int t = 0; t < 200; ++t) {
    const auto g = oracle::random_gmm(eng, 1 + t % 6, 1 + t % 3);
    Vector x(g.dim());
    for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = nd(eng);
    const Vector r = responsibilities(g, x);
    EXPECT_NEAR(r.sum(), 1.0, 1e-9);
    EXPECT_GE(r.minCoeff(), 0.0);
  }
}

TEST(MapClassify, SingleOneHotComponent) {
  Matrix v(1, 3);
  v << 0, 0, 1;
  const auto c = map_classify(one_d({1}, {0}, {1}).with_labels(v), pt(0.3));
  EXPECT_EQ(c.label, 2);
  EXPECT_EQ(c.posterior, v.row(0).transpose());
}

TEST(MapClassify, WellSeparatedComponents) {
  Matrix v(2, 2);
  v << 1, 0, 0, 1;
  const auto c = map_classify(one_d({0.5, 0.5}, {0, 10}, {1, 1}).with_labels(v), pt(0));
  EXPECT_EQ(c.label, 0);
  EXPECT_GE(c.posterior[0], 0.999);
}

TEST(MapClassify, TiesGoToLowestIndex) {
  const Matrix v = Matrix::Constant(2, 2, 0.5);
  const auto c = map_classify(one_d({0.4, 0.6}, {0, 3}, {1, 2}).with_labels(v), pt(1));
  EXPECT_EQ(c.label, 0);
  EXPECT_NEAR(c.posterior[0], 0.5, 1e-15);
  EXPECT_NEAR(c.posterior[1], 0.5, 1e-15);
}

TEST(MapClassify, UnlabeledMixtureIsInvalidState) {
  EXPECT_THROW(map_classify(one_d({1}, {0}, {1}), pt(0)), InvalidState);
}

TEST(MapClassify, PosteriorIsResponsibilitiesTimesLabels) {
  std::mt19937_64 eng(17);
  std::normal_distribution<double> nd(0.0, 3.0);
  for (int t = 0; t < 100; ++t) {
    const auto g = oracle::random_gmm(eng, 2 + t % 5, 2, 3);
    Vector x(2);
    x << nd(eng), nd(eng);
    const Vector r = responsibilities(g, x);
    const auto c = map_classify(g, x);
    for (Eigen::Index y = 0; y < 3; ++y) {
      double naive = 0.0;
      for (Eigen::Index k = 0; k < g.size(); ++k) naive += r[k] * g.labels()(k, y);
      EXPECT_NEAR(c.posterior[y], naive, 1e-12);
    }
  }
}

TEST(Sample, DegenerateWeightsPickOnlyComponentZero) {
  const auto s = sample(one_d({1, 0}, {0, 5}, {1, 1}), 100, 42);
  for (int id : s.component_ids) EXPECT_EQ(id, 0);
}

TEST(Sample, NearDegenerateGaussianStaysPut) {
  const GaussianMixture g(Vector::Ones(1), Matrix::Constant(1, 2, 2.0), Matrix::Constant(1, 2, 1e-3));
  const auto s = sample(g, 50, 9);
  for (Eigen::Index i = 0; i < 50; ++i) EXPECT_LT((s.points.row(i).array() - 2.0).abs().maxCoeff(), 0.01);
}

TEST(Sample, ComponentFrequencyWithinBinomialBand) {
  const auto s = sample(one_d({0.5, 0.5}, {0, 5}, {1, 1}), 10000, 1234);
  double zero = 0;
  for (int id : s.component_ids) zero += id == 0;
  // 4 sigma of Binomial(10000, 0.5) is 0.02
  EXPECT_GE(zero / 10000, 0.47);
  EXPECT_LE(zero / 10000, 0.53);
}

TEST(Sample, ClassIdsFollowLabelArgmax) {
  Matrix v(2, 2);
  v << 0.2, 0.8, 0.9, 0.1;
  const auto s = sample(one_d({0.5, 0.5}, {0, 5}, {1, 1}).with_labels(v), 200, 3);
  ASSERT_TRUE(s.class_ids.has_value());
  for (std::size_t i = 0; i < 200; ++i) EXPECT_EQ((*s.class_ids)[i], s.component_ids[i] == 0 ? 1 : 0);
}

TEST(Sample, BitwiseDeterministic) {
  std::mt19937_64 eng(8);
  const auto g = oracle::random_gmm(eng, 4, 3, 2);
  const auto a = sample(g, 500, 77);
  const auto b = sample(g, 500, 77);
  EXPECT_EQ(a.points, b.points);
  EXPECT_EQ(a.component_ids, b.component_ids);
  const auto c = sample(g, 500, 78);
  EXPECT_NE(a.points, c.points);
}
