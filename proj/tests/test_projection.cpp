#include <gtest/gtest.h>

#include <random>

#include "gmmot/optimizer.hpp"
#include "gmmot/projection.hpp"
#include "oracles.hpp"

using namespace gmmot;

namespace {

// closest point of a 3-simplex grid with the given resolution
Vector grid_projection(const Vector& v, int steps) {
  Vector best(3), y(3);
  double dist = std::numeric_limits<double>::infinity();
  for (int a = 0; a <= steps; ++a)
    for (int b = 0; a + b <= steps; ++b) {
      y << a, b, steps - a - b;
      y /= steps;
      const double dd = (y - v).squaredNorm();
      if (dd < dist) {
        dist = dd;
        best = y;
      }
    }
  return best;
}

}  // namespace

TEST(ProjectSimplex, MatchesGridSearch) {
  Vector v(3);
  v << 0.4, 0.4, -0.2;
  const Vector p = project_simplex(v);
  EXPECT_LE((p - grid_projection(v, 1000)).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_NEAR(p[0], 0.5, 1e-15);
  EXPECT_NEAR(p[1], 0.5, 1e-15);
  EXPECT_EQ(p[2], 0.0);

  std::mt19937_64 eng(1);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int t = 0; t < 30; ++t) {
    Vector r(3);
    r << nd(eng), nd(eng), nd(eng);
    EXPECT_LE((project_simplex(r) - grid_projection(r, 600)).cwiseAbs().maxCoeff(), 5e-3);
  }
}

TEST(ProjectSimplex, VariationalInequality) {
  // p is the projection iff <v - p, y - p> <= 0 for every y on the simplex
  std::mt19937_64 eng(2);
  std::normal_distribution<double> nd(0.0, 2.0);
  for (int t = 0; t < 100; ++t) {
    const auto n = 1 + t % 7;
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = nd(eng);
    const Vector p = project_simplex(v);
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    EXPECT_GE(p.minCoeff(), 0.0);
    for (int k = 0; k < 20; ++k) {
      const Vector y = oracle::random_simplex(eng, n);
      EXPECT_LE((v - p).dot(y - p), 1e-12);
    }
    EXPECT_LE((project_simplex(p) - p).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(ProjectSimplex, PointsOnTheSimplexAreFixed) {
  std::mt19937_64 eng(3);
  const Vector w = oracle::random_simplex(eng, 5);
  EXPECT_LE((project_simplex(w) - w).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(project_simplex(Vector(0)), InvalidInput);
}

TEST(ProjectNonneg, Floors) {
  Vector v(3);
  v << -1, 0.5, 1e-5;
  const Vector p = project_nonneg(v, 1e-3);
  EXPECT_EQ(p[0], 1e-3);
  EXPECT_EQ(p[1], 0.5);
  EXPECT_EQ(p[2], 1e-3);
}

TEST(SoftmaxRows, RowsSumToOneAndShiftInvariant) {
  Matrix u(2, 3);
  u << 1, 2, 3, 1000, 1000, -1000;
  const Matrix v = softmax_rows(u);
  EXPECT_NEAR(v.row(0).sum(), 1.0, 1e-15);
  EXPECT_NEAR(v(1, 0), 0.5, 1e-15);
  EXPECT_LE(v(1, 2), 1e-300);
  const Matrix shifted = softmax_rows(u.array() + 7.0);
  EXPECT_LE((shifted - v).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Optimizer, AdamFirstStepIsLearningRateTimesSign) {
  Optimizer opt(OptimizerKind::adam, 0.1, 3);
  Vector x = Vector::Zero(3), g(3);
  g << 5.0, -0.01, 0.0;
  opt.step(x, g);
  EXPECT_NEAR(x[0], -0.1, 1e-8);
  EXPECT_NEAR(x[1], 0.1, 1e-5);
  EXPECT_EQ(x[2], 0.0);
  EXPECT_EQ(opt.steps(), 1);
}

TEST(Optimizer, SgdAndAdamMinimizeAQuadratic) {
  for (auto kind : {OptimizerKind::sgd, OptimizerKind::adam}) {
    Optimizer opt(kind, 0.05, 2);
    Vector x(2);
    x << 3, -2;
    for (int i = 0; i < 2000; ++i) opt.step(x, 2.0 * x);
    EXPECT_LE(x.norm(), 1e-2);
  }
}
