#include <gtest/gtest.h>

#include <random>

#include "mfcs/predictors.hpp"

using namespace mfcs;

namespace {

// Reference data shared with tests/fixtures/make_oracles.py.
Bag reference_bag() {
  const double X[6][2] = {{0.3, -1.2}, {1.1, 0.4}, {-0.7, 0.9}, {0.2, 0.2}, {-1.5, -0.3}, {0.8, -0.6}};
  const double y[6] = {0.5, 1.7, -0.4, 0.3, -2.1, 1.0};
  Bag bag;
  for (int i = 0; i < 6; ++i) {
    LabeledPoint p;
    p.x = Vector(2);
    p.x << X[i][0], X[i][1];
    p.y = y[i];
    bag.add(p);
  }
  return bag;
}

Vector vec(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Bag random_bag(std::size_t n, Eigen::Index dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Bag bag;
  for (std::size_t i = 0; i < n; ++i) {
    LabeledPoint p;
    p.x = Vector(dim);
    for (Eigen::Index k = 0; k < dim; ++k) p.x[k] = g(rng);
    p.y = g(rng);
    bag.add(p);
  }
  return bag;
}

}  // namespace

TEST(Ridge, MatchesFrozenReference) {
  const auto model = ridge_fit(reference_bag(), 0.01);
  EXPECT_NEAR(model.coefficients[0], 1.3552962657819145, 1e-12);
  EXPECT_NEAR(model.coefficients[1], 0.18620617990454774, 1e-12);
  EXPECT_EQ(model.fitted_size, 6u);
}

TEST(Ridge, MatchesNormalEquations) {
  const auto bag = random_bag(30, 5, 9);
  Matrix X(30, 5);
  Vector y(30);
  for (std::size_t i = 0; i < 30; ++i) {
    X.row(static_cast<Eigen::Index>(i)) = bag[i].x.transpose();
    y[static_cast<Eigen::Index>(i)] = bag[i].y;
  }
  const Matrix A = X.transpose() * X + 0.7 * Matrix::Identity(5, 5);
  const Vector w = A.colPivHouseholderQr().solve(X.transpose() * y);
  const auto model = ridge_fit(bag, 0.7);
  EXPECT_LT((model.coefficients - w).cwiseAbs().maxCoeff(), 1e-12);
  const Vector preds = model.predict_rows(X);
  EXPECT_LT((preds - X * w).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Ridge, AccumulatorEqualsBatchFit) {
  const auto a = random_bag(10, 3, 1);
  const auto b = random_bag(7, 3, 2);
  RidgeAccumulator acc(3);
  acc.add(a);
  acc.add(b);
  Bag both = a;
  for (const auto& p : b) both.add(p);
  EXPECT_LT((acc.solve(0.3).coefficients - ridge_fit(both, 0.3).coefficients).cwiseAbs().maxCoeff(),
            1e-13);
  EXPECT_EQ(acc.count(), 17u);
}

TEST(Ridge, RejectsBadInput) {
  EXPECT_THROW(ridge_fit(Bag(), 0.1), ParameterError);
  EXPECT_THROW(ridge_fit(random_bag(3, 2, 1), 0.0), ParameterError);
  Bag mixed = random_bag(2, 2, 1);
  LabeledPoint odd;
  odd.x = Vector::Zero(3);
  EXPECT_THROW(mixed.add(odd), ShapeError);
  EXPECT_THROW(ridge_residual_affine(random_bag(3, 2, 1), vec(0, 0), 0.0), NumericalError);
}

// The affine residual path must agree with refitting on training + (x*, y).
TEST(Ridge, ResidualAffineMatchesRefit) {
  const auto train = random_bag(12, 3, 4);
  Vector xs(3);
  xs << 0.4, -1.1, 2.0;
  const auto affine = ridge_residual_affine(train, xs, 0.05);
  ASSERT_EQ(affine.size(), 13u);
  for (double y : {-3.0, -0.2, 0.0, 1.7, 10.0}) {
    Bag aug = train;
    LabeledPoint star;
    star.x = xs;
    star.y = y;
    aug.add(star);
    const auto model = ridge_fit(aug, 0.05);
    for (std::size_t i = 0; i < 13; ++i) {
      const double expected = aug[i].y - model.predict(aug[i].x);
      EXPECT_NEAR(affine.residual(i, y), expected, 1e-11);
    }
  }
}

TEST(Gp, MatchesFrozenReference) {
  const auto model = GaussianProcessModel::fit(reference_bag());
  const Vector q[3] = {vec(0.0, 0.0), vec(1.0, -1.0), vec(-2.0, 1.5)};
  const double mean[3] = {0.03247082354802036, 1.1872497488584337, -2.371083523711071};
  const double var[3] = {0.00193227563144365, 0.02527119362776258, 0.07346359134401653};
  for (int i = 0; i < 3; ++i) {
    const auto p = model.predict(q[i]);
    EXPECT_NEAR(p.mean, mean[i], 1e-12);
    EXPECT_NEAR(p.variance, var[i], 1e-12);
  }
}

TEST(Gp, MatchesKernelMatrixForm) {
  const GpKernel kernel{0.3, 0.2};
  const auto bag = random_bag(15, 4, 12);
  const std::size_t n = bag.size();
  Matrix K(n, n);
  Vector y(n);
  auto k = [&](const Vector& a, const Vector& b) { return kernel.sigma0 * kernel.sigma0 + a.dot(b); };
  for (std::size_t i = 0; i < n; ++i) {
    y[static_cast<Eigen::Index>(i)] = bag[i].y;
    for (std::size_t j = 0; j < n; ++j) {
      K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          k(bag[i].x, bag[j].x) + (i == j ? kernel.noise_variance : 0.0);
    }
  }
  const Matrix Kinv = K.inverse();
  const auto model = GaussianProcessModel::fit(bag, kernel);
  const auto queries = random_bag(5, 4, 13);
  for (const auto& q : queries) {
    Vector ks(n);
    for (std::size_t i = 0; i < n; ++i) ks[static_cast<Eigen::Index>(i)] = k(bag[i].x, q.x);
    const double mean = ks.dot(Kinv * y);
    const double var = k(q.x, q.x) - ks.dot(Kinv * ks);
    const auto p = model.predict(q.x);
    EXPECT_NEAR(p.mean, mean, 1e-10);
    EXPECT_NEAR(p.variance, var, 1e-10);
  }
}

TEST(Gp, PriorAndShrinkingVariance) {
  const Vector x = vec(0.5, -2.0);
  const auto prior = gp_fit_predict(Bag(), x);
  EXPECT_EQ(prior.mean, 0.0);
  EXPECT_NEAR(prior.variance, 0.05 * 0.05 + x.squaredNorm(), 1e-15);

  const auto data = random_bag(40, 2, 3);
  double last = prior.variance;
  Bag grown;
  for (const auto& p : data) {
    grown.add(p);
    const double v = gp_fit_predict(grown, x).variance;
    EXPECT_LE(v, last + 1e-15);
    last = v;
  }
}

TEST(Gp, AccumulatorAndRowPredictions) {
  const auto bag = random_bag(20, 3, 8);
  GpAccumulator acc(3);
  acc.add(bag);
  const auto a = acc.model();
  const auto b = GaussianProcessModel::fit(bag);
  Matrix rows(4, 3);
  rows.setRandom();
  Vector mean, var;
  a.predict_rows(rows, &mean, &var);
  for (Eigen::Index r = 0; r < 4; ++r) {
    const auto p = b.predict(rows.row(r).transpose());
    EXPECT_NEAR(mean[r], p.mean, 1e-12);
    EXPECT_NEAR(var[r], p.variance, 1e-12);
  }
  EXPECT_EQ(a.fitted_size(), 20u);
}
