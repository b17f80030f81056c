#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mfcs/verify.hpp"
#include "mfcs/weights.hpp"

using namespace mfcs;

namespace {

// Softmax-like density that depends on the conditioning features only
// through their sum, so it is symmetric in the bag.
class SumTiltEvaluator final : public DensityEvaluator {
 public:
  double density(const LabeledPoint& q, const BagView& bag) const override {
    double s = 0.0;
    bag.for_each([&](const LabeledPoint& p) { s += p.x.sum(); });
    return std::exp(0.4 * q.x.sum() * std::tanh(s) + 0.1 * q.x[0]);
  }
  bool depends_on_labels() const override { return false; }
};

std::vector<LabeledPoint> random_points(std::size_t m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  std::vector<LabeledPoint> pts(m);
  for (auto& p : pts) {
    p.x = Vector(2);
    p.x << n(rng), n(rng);
    p.y = n(rng);
  }
  return pts;
}

double f(const SumTiltEvaluator& ev, const std::vector<LabeledPoint>& pts, std::size_t q,
         std::vector<std::size_t> bag) {
  std::vector<LabeledPoint> sub;
  for (auto i : bag) sub.push_back(pts[i]);
  ExclusionMask none;
  return ev.density(pts[q], BagView(sub, none));
}

}  // namespace

TEST(WeightVector, NormalizeAndUniform) {
  const auto w = WeightVector::normalize({2.0, 2.0, 2.0});
  for (double v : w.values()) EXPECT_EQ(v, 1.0 / 3.0);
  const auto u = WeightVector::uniform(7);
  for (double v : u.values()) EXPECT_EQ(v, 1.0 / 7.0);
  const auto r = WeightVector::normalize({1.0, 3.0});
  EXPECT_DOUBLE_EQ(r[0], 0.25);
  EXPECT_DOUBLE_EQ(r.test_weight(), 0.75);
  EXPECT_THROW(WeightVector::normalize({0.0, 0.0}), DegenerateDensityError);
  EXPECT_THROW(WeightVector::normalize({1.0, -1.0}), NumericalError);
}

TEST(OrderedTupleCount, SmallValues) {
  EXPECT_EQ(ordered_tuple_count(5, 0), 1.0);
  EXPECT_EQ(ordered_tuple_count(5, 1), 5.0);
  EXPECT_EQ(ordered_tuple_count(5, 3), 60.0);
  EXPECT_EQ(ordered_tuple_count(22, 4), 22.0 * 21 * 20 * 19);
}

// One dynamic step: weight_i proportional to p(x_i | all other points).
TEST(MfcsWeights, OneStepHandOracle) {
  SumTiltEvaluator ev;
  const auto pts = random_points(4, 1);
  std::vector<double> raw;
  for (std::size_t i = 0; i < 4; ++i) {
    std::vector<std::size_t> rest;
    for (std::size_t j = 0; j < 4; ++j) {
      if (j != i) rest.push_back(j);
    }
    raw.push_back(f(ev, pts, i, rest));
  }
  const auto expected = WeightVector::normalize(raw);
  const auto exact = mfcs_exact_weights(pts, ev, 3, 1);
  const auto d1 = mfcs_dstep_weights(pts, ev, 1);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(exact[i], expected[i], 1e-14);
    EXPECT_NEAR(d1[i], expected[i], 1e-14);
  }
}

// Two dynamic steps after one initial point, three points in total:
// weight_i proportional to sum_{j != i} p(x_j | {k}) p(x_i | {k, j}).
TEST(MfcsWeights, TwoStepHandOracle) {
  SumTiltEvaluator ev;
  const auto pts = random_points(3, 2);
  std::vector<double> raw(3, 0.0);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      if (j == i) continue;
      const std::size_t k = 3 - i - j;
      raw[i] += f(ev, pts, j, {k}) * f(ev, pts, i, {k, j});
    }
  }
  const auto expected = WeightVector::normalize(raw);
  const auto exact = mfcs_exact_weights(pts, ev, 1, 2);
  const auto d2 = mfcs_dstep_weights(pts, ev, 2);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(exact[i], expected[i], 1e-14);
    EXPECT_NEAR(d2[i], expected[i], 1e-14);
  }
}

TEST(MfcsWeights, BruteForceExactAndFullDepthAgree) {
  SumTiltEvaluator ev;
  auto label = [](const LabeledPoint& p) { return std::exp(-0.5 * p.y * p.y); };
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (std::size_t n : {1u, 2u, 3u}) {
      for (std::size_t t : {1u, 2u, 3u}) {
        const auto pts = random_points(n + t, 100 + seed);
        const auto brute = brute_force_weights(pts, mfcs_joint_density(ev, n, label));
        const auto exact = mfcs_exact_weights(pts, ev, n, t);
        const auto full = mfcs_dstep_weights(pts, ev, t);
        for (std::size_t i = 0; i < n + t; ++i) {
          EXPECT_NEAR(brute[i], exact[i], 1e-12);
          EXPECT_NEAR(full[i], exact[i], 1e-12);
        }
      }
    }
  }
}

TEST(MfcsWeights, UniformEvaluatorGivesUniformWeights) {
  UniformEvaluator ev(0.37);
  const auto pts = random_points(9, 3);
  for (std::size_t d = 1; d <= 3; ++d) {
    const auto w = mfcs_dstep_weights(pts, ev, d);
    for (double v : w.values()) EXPECT_EQ(v, 1.0 / 9.0);
  }
}

TEST(MfcsWeights, FactorRequestsMatchTupleCount) {
  SumTiltEvaluator ev;
  const auto pts = random_points(10, 4);
  for (std::size_t d = 1; d <= 4; ++d) {
    for (bool memo : {true, false}) {
      WeightOptions opt;
      opt.memoize = memo;
      WeightStats stats;
      mfcs_dstep_weights(pts, ev, d, opt, &stats);
      ASSERT_EQ(stats.factor_requests.size(), d);
      for (std::size_t k = 1; k <= d; ++k) {
        EXPECT_EQ(static_cast<double>(stats.factor_requests[k - 1]), ordered_tuple_count(10, k));
      }
      if (!memo) EXPECT_EQ(stats.evaluator_calls, stats.total_requests());
      if (memo && d > 2) EXPECT_LT(stats.evaluator_calls, stats.total_requests());
    }
  }
}

TEST(MfcsWeights, MemoizationDoesNotChangeWeights) {
  SumTiltEvaluator ev;
  const auto pts = random_points(8, 5);
  WeightOptions off;
  off.memoize = false;
  for (std::size_t d = 1; d <= 3; ++d) {
    const auto a = mfcs_dstep_weights(pts, ev, d);
    const auto b = mfcs_dstep_weights(pts, ev, d, off);
    for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(a[i], b[i]);
  }
}

TEST(MfcsWeights, OpenMpMatchesSerialBitwise) {
  const auto inst = make_weight_instance(10, 4, 77, 64, 4);
  for (std::size_t d = 1; d <= 3; ++d) {
    WeightStats serial_stats;
    const auto serial = mfcs_dstep_weights(inst.points, *inst.evaluator, d, {}, &serial_stats);
    for (int threads : {1, 2, 3, 8}) {
      WeightStats omp_stats;
      const auto par =
          mfcs_dstep_weights_omp(inst.points, *inst.evaluator, d, {}, &omp_stats, threads);
      ASSERT_EQ(par.size(), serial.size());
      for (std::size_t i = 0; i < serial.size(); ++i) {
        EXPECT_EQ(par[i], serial[i]) << "d=" << d << " threads=" << threads;
      }
      EXPECT_EQ(omp_stats.factor_requests, serial_stats.factor_requests);
    }
  }
}

TEST(MfcsWeights, GuardsAndLimits) {
  SumTiltEvaluator ev;
  const auto pts = random_points(12, 6);
  EXPECT_THROW(mfcs_dstep_weights(pts, ev, 0), ParameterError);
  EXPECT_THROW(mfcs_dstep_weights(pts, ev, 13), ParameterError);
  WeightOptions tight;
  tight.max_operations = 100;
  EXPECT_THROW(mfcs_dstep_weights(pts, ev, 3, tight), ComplexityError);
  EXPECT_THROW(brute_force_weights(pts, mfcs_joint_density(ev, 6, {})), ComplexityError);
  EXPECT_THROW(mfcs_exact_weights(pts, ev, 5, 5), ShapeError);
}

TEST(VerifyWeights, SmallRunPasses) {
  const auto report = verify_weights(3, 2, {1, 2}, 10, 0);
  EXPECT_TRUE(report.passed);
  EXPECT_LE(report.max_brute_vs_exact, 1e-9);
  EXPECT_LE(report.max_exact_vs_full_depth, 1e-9);
  EXPECT_THROW(verify_weights(4, 4, {1}, 1, 0), ComplexityError);
}
