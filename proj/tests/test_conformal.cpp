#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "mfcs/conformal.hpp"
#include "mfcs/predictors.hpp"

using namespace mfcs;

namespace {

Bag random_bag(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Bag bag;
  for (std::size_t i = 0; i < n; ++i) {
    LabeledPoint p;
    p.x = Vector(3);
    p.x << g(rng), g(rng), g(rng);
    p.y = p.x[0] - 0.5 * p.x[2] + 0.3 * g(rng);
    bag.add(p);
  }
  return bag;
}

SplitCalibrationState make_state(std::size_t n_train, std::size_t n_cal, std::uint64_t seed) {
  const auto train = random_bag(n_train, seed);
  const auto model = ridge_fit(train, 0.01);
  return make_split_state(train, random_bag(n_cal, seed + 1000),
                          [model](const Vector& x) { return model.predict(x); });
}

// ceil((1 - alpha)(n + 1))-th smallest of `scores`, or infinity.
ExtendedReal rank_quantile(std::vector<double> scores, std::size_t alpha_pct) {
  std::sort(scores.begin(), scores.end());
  const std::size_t m = scores.size() + 1;
  const std::size_t rank = ((100 - alpha_pct) * m + 99) / 100;
  if (rank > scores.size()) return ExtendedReal::plus_infinity();
  return ExtendedReal::finite(scores[rank - 1]);
}

bool same_interval(const PredictionInterval& a, const PredictionInterval& b) {
  return a.lower == b.lower && a.upper == b.upper;
}

}  // namespace

TEST(SplitCp, StandardIntervalUsesConformalRank) {
  for (std::size_t n_cal : {5u, 9u, 19u, 32u}) {
    const auto state = make_state(20, n_cal, n_cal);
    const auto x = random_bag(1, 99)[0].x;
    const auto iv = standard_split_interval(state, x, 0.1);
    const auto q = rank_quantile(state.scores, 10);
    const double mu = state.predict(x);
    if (q.is_plus_infinity()) {
      EXPECT_FALSE(iv.is_informative());
    } else {
      EXPECT_EQ(iv.lower.value(), mu - q.value());
      EXPECT_EQ(iv.upper.value(), mu + q.value());
    }
  }
}

TEST(SplitCp, ScoresAreAbsoluteResiduals) {
  const auto state = make_state(10, 6, 3);
  ASSERT_EQ(state.scores.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(state.scores[i], std::fabs(state.calibration[i].y - state.predict(state.calibration[i].x)));
  }
}

TEST(SplitCp, WeightedReducesToStandard) {
  const auto state = make_state(25, 20, 4);
  LabeledPoint test;
  test.x = random_bag(1, 5)[0].x;
  const auto standard = standard_split_interval(state, test.x, 0.1);
  EXPECT_TRUE(same_interval(split_cp_interval(state, test.x, WeightVector::uniform(21), 0.1), standard));
  UniformEvaluator flat;
  for (std::size_t d = 1; d <= 3; ++d) {
    EXPECT_TRUE(same_interval(mfcs_split_interval(state, test, flat, d, 0.1), standard));
  }
  EXPECT_TRUE(same_interval(one_step_fcs_interval(state, test, flat, 0.1), standard));
}

TEST(SplitCp, HeavyTestWeightGivesInfiniteInterval) {
  const auto state = make_state(10, 4, 6);
  const auto x = random_bag(1, 7)[0].x;
  const auto w = WeightVector::normalize({0.01, 0.01, 0.01, 0.01, 0.96});
  EXPECT_FALSE(split_cp_interval(state, x, w, 0.1).is_informative());
}

TEST(SplitCp, WeightPointLayout) {
  const auto state = make_state(5, 4, 8);
  LabeledPoint test;
  test.x = Vector::Ones(3);
  test.y = 42.0;
  const auto pts = split_weight_points(state, test);
  ASSERT_EQ(pts.size(), 5u);
  EXPECT_EQ(pts.back().x, test.x);
  EXPECT_EQ(pts.back().y, 0.0);
  EXPECT_EQ(pts[0].y, state.calibration[0].y);
}

TEST(LabelGrid, EndpointsAndSpacing) {
  const auto g = make_label_grid(-1.0, 3.0, 0.5, 200);
  ASSERT_EQ(g.size(), 200u);
  EXPECT_DOUBLE_EQ(g.front(), -2.0);
  EXPECT_DOUBLE_EQ(g.back(), 4.0);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_GT(g[i], g[i - 1]);
}

// Refit-from-scratch oracle for unweighted full CP with ridge.
TEST(FullCp, RidgeGridMatchesPerLabelRefit) {
  UniformEvaluator flat;
  const std::size_t alpha_pct = 10;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto observed = random_bag(14, 500 + seed);
    LabeledPoint test;
    test.x = random_bag(1, 900 + seed)[0].x;
    const auto grid = make_label_grid(-4.0, 4.0, 0.5, 120);
    const auto set = full_cp_set_ridge(observed, test, flat, 1, 0.1, grid, 0.05);
    ASSERT_EQ(set.included.size(), grid.size());
    const auto weights = dstep_full_cp_weights(flat, 1);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      Bag aug = observed;
      LabeledPoint star = test;
      star.y = grid[g];
      aug.add(star);
      const auto model = ridge_fit(aug, 0.05);
      std::vector<double> scores;
      for (std::size_t i = 0; i < observed.size(); ++i) {
        scores.push_back(std::fabs(aug[i].y - model.predict(aug[i].x)));
      }
      const double test_score = std::fabs(star.y - model.predict(star.x));
      const auto q = rank_quantile(scores, alpha_pct);
      const bool admitted = q.is_plus_infinity() || test_score <= q.value();
      EXPECT_EQ(set.included[g] != 0, admitted) << "seed " << seed << " grid " << g;
      EXPECT_EQ(full_cp_admits_ridge(observed, test, grid[g], weights, 0.1, 0.05), admitted);
    }
    ASSERT_TRUE(set.hull.has_value());
    EXPECT_TRUE(set.contiguous);
  }
}

TEST(FullCp, HullIsUnboundedWhenQuantileIsInfinite) {
  UniformEvaluator flat;
  const auto observed = random_bag(5, 3);
  LabeledPoint test;
  test.x = Vector::Zero(3);
  const auto grid = make_label_grid(-1.0, 1.0, 0.1, 50);
  // Five points at alpha = 0.1 need rank 6 > 5: every label is admitted.
  const auto set = full_cp_set_ridge(observed, test, flat, 1, 0.1, grid, 0.05);
  EXPECT_EQ(set.count(), grid.size());
  ASSERT_TRUE(set.hull.has_value());
  EXPECT_FALSE(set.hull->is_informative());
}

TEST(Aci, ClosedFormTrajectory) {
  const double step = 0.005;
  const double target = 0.1;
  const std::vector<std::vector<int>> scripts{
      {0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
      {1, 1, 1, 1, 1, 1, 1, 1},
      {1, 0, 0, 1, 0, 0, 0, 1, 1, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0},
      {0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1}};
  for (const auto& script : scripts) {
    auto state = aci_start(target, step);
    EXPECT_EQ(state.alpha_t, target);
    int misses = 0;
    for (std::size_t t = 0; t < script.size(); ++t) {
      state = aci_update(state, script[t] != 0);
      misses += script[t];
      const double closed = target + step * (static_cast<double>(t + 1) * target - misses);
      EXPECT_NEAR(state.alpha_t, closed, 1e-12);
    }
  }
}

TEST(Aci, EffectiveAlphaIsClamped) {
  AciState s = aci_start(0.1, 0.5);
  for (int i = 0; i < 5; ++i) s = aci_update(s, true);
  EXPECT_LT(s.alpha_t, 0.0);
  EXPECT_EQ(aci_effective_alpha(s), kAciAlphaFloor);
  s = aci_start(0.1, 0.5);
  for (int i = 0; i < 5; ++i) s = aci_update(s, false);
  EXPECT_GT(s.alpha_t, 0.0);
  EXPECT_EQ(aci_effective_alpha(s), std::min(s.alpha_t, kAciAlphaCeiling));
}
