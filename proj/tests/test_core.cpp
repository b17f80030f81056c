#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "mfcs/core.hpp"

using namespace mfcs;

namespace {

LabeledPoint pt(std::initializer_list<double> x, double y) {
  LabeledPoint p;
  p.x = Eigen::Map<const Vector>(x.begin(), static_cast<Eigen::Index>(x.size()));
  p.y = y;
  return p;
}

}  // namespace

TEST(Bag, EqualityIgnoresOrder) {
  Bag a({pt({1, 2}, 0.5), pt({3, 4}, -1.0), pt({1, 2}, 0.5)});
  Bag b({pt({3, 4}, -1.0), pt({1, 2}, 0.5), pt({1, 2}, 0.5)});
  Bag c({pt({3, 4}, -1.0), pt({1, 2}, 0.5), pt({1, 2}, 0.25)});
  EXPECT_TRUE(a == b);
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  EXPECT_FALSE(a == c);
  EXPECT_EQ(a.dimension(), 2);
  EXPECT_EQ(Bag().dimension(), 0);
}

TEST(ExtendedReal, OrderingAndFormatting) {
  const auto inf = ExtendedReal::plus_infinity();
  const auto ninf = ExtendedReal::minus_infinity();
  const auto one = ExtendedReal::finite(1.0);
  EXPECT_TRUE(ninf < one);
  EXPECT_TRUE(one < inf);
  EXPECT_FALSE(inf < inf);
  EXPECT_TRUE(inf <= inf);
  EXPECT_EQ(inf.to_string(), "inf");
  EXPECT_EQ(ninf.to_string(), "-inf");
  EXPECT_EQ(ExtendedReal::finite(0.1).to_string(), "0.1");
  EXPECT_THROW(ExtendedReal::finite(std::nan("")), ParameterError);
  EXPECT_THROW(inf.value(), NumericalError);
}

TEST(CompensatedSum, RecoversCancelledTerms) {
  const std::vector<double> v{1e16, 1.0, -1e16, 1.0};
  EXPECT_EQ(compensated_total(v), 2.0);
}

TEST(WeightedQuantile, HandExamples) {
  // Scores 3,1,2 each with weight 0.2, infinity mass 0.4.
  const std::vector<double> scores{3.0, 1.0, 2.0};
  const std::vector<double> w{0.2, 0.2, 0.2, 0.4};
  const auto d = WeightedScoreDistribution::from_scores(scores, w);
  EXPECT_EQ(weighted_quantile(d, 0.1).value(), 1.0);
  EXPECT_EQ(weighted_quantile(d, 0.2).value(), 1.0);
  EXPECT_EQ(weighted_quantile(d, 0.3).value(), 2.0);
  EXPECT_EQ(weighted_quantile(d, 0.6).value(), 3.0);
  EXPECT_TRUE(weighted_quantile(d, 0.61).is_plus_infinity());
}

TEST(WeightedQuantile, TiedScoresMerge) {
  const std::vector<double> scores{1.0, 1.0, 5.0};
  const std::vector<double> w{0.25, 0.25, 0.25, 0.25};
  const auto d = WeightedScoreDistribution::from_scores(scores, w);
  EXPECT_EQ(weighted_quantile(d, 0.5).value(), 1.0);
  EXPECT_EQ(weighted_quantile(d, 0.51).value(), 5.0);
}

TEST(WeightedQuantile, UniformWeightsGiveConformalRank) {
  // Unweighted split CP: the ceil((1 - alpha)(n + 1))-th smallest score, or
  // infinity when that rank exceeds n. Rank computed in integer arithmetic.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int alpha_pct : {5, 10, 20, 50}) {
    const double alpha = alpha_pct / 100.0;
    for (std::size_t n = 1; n <= 120; ++n) {
      std::vector<double> scores(n);
      for (auto& s : scores) s = u(rng);
      std::vector<double> w(n + 1, 1.0 / static_cast<double>(n + 1));
      const auto d = WeightedScoreDistribution::from_scores(scores, w);
      const auto q = weighted_quantile(d, 1.0 - alpha);
      const std::size_t m = n + 1;
      const std::size_t rank = ((100 - alpha_pct) * m + 99) / 100;
      auto sorted = scores;
      std::sort(sorted.begin(), sorted.end());
      if (rank > n) {
        EXPECT_TRUE(q.is_plus_infinity()) << "n=" << n << " alpha=" << alpha;
      } else {
        ASSERT_TRUE(q.is_finite()) << "n=" << n << " alpha=" << alpha;
        EXPECT_EQ(q.value(), sorted[rank - 1]) << "n=" << n << " alpha=" << alpha;
      }
    }
  }
}

TEST(WeightedScoreDistribution, RejectsBadInput) {
  const std::vector<double> scores{1.0};
  EXPECT_THROW(WeightedScoreDistribution::from_scores(scores, std::vector<double>{0.5, 0.6}),
               Error);
  EXPECT_THROW(WeightedScoreDistribution::from_scores(scores, std::vector<double>{1.0}), Error);
  EXPECT_THROW(WeightedScoreDistribution::from_scores(scores, std::vector<double>{-0.5, 1.5}),
               Error);
}

TEST(PredictionInterval, WidthAndContainment) {
  const auto iv = interval_from_residual_quantile(1.0, ExtendedReal::finite(0.5));
  EXPECT_EQ(iv.width().value(), 1.0);
  EXPECT_TRUE(iv.contains(1.5));
  EXPECT_FALSE(iv.contains(1.6));
  const auto whole = interval_from_residual_quantile(1.0, ExtendedReal::plus_infinity());
  EXPECT_FALSE(whole.is_informative());
  EXPECT_TRUE(whole.width().is_plus_infinity());
  EXPECT_TRUE(whole.contains(-1e300));
  EXPECT_THROW(interval_from_residual_quantile(0.0, ExtendedReal::finite(-1.0)), ParameterError);
}
