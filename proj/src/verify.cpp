#include "mfcs/verify.hpp"

#include <algorithm>
#include <chrono>

#include <fmt/format.h>

#include "mfcs/sim.hpp"

namespace mfcs {

WeightInstance make_weight_instance(std::size_t n, std::size_t t, std::uint64_t seed,
                                    std::size_t pool_size, std::size_t dimension) {
  RegressionPoolSpec spec;
  spec.size = pool_size;
  spec.dimension = dimension;
  spec.seed = seed;
  spec.noise_scale = 0.3;
  WeightInstance inst;
  inst.pool = std::make_shared<const Pool>(make_regression_pool(spec));
  inst.n = n;
  inst.t = t;
  auto rng = make_stream(seed, "instance");
  inst.lambda = 0.5 + 2.5 * uniform01(rng);

  UtilityModel model;
  model.predictor = PredictorKind::kRidge;
  model.utility = UtilityKind::kPredictedMean;
  // A fixed warm-start bag keeps every refit well posed, even on an empty
  // conditioning set.
  Bag warm;
  for (std::size_t k = 0; k < 2; ++k) {
    warm.add(inst.pool->observe(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(pool_size)),
                                standard_normal(rng)));
  }
  inst.evaluator = std::make_unique<RefitQueryEvaluator>(*inst.pool, warm, model, inst.lambda);

  for (std::size_t k = 0; k < n; ++k) {
    const auto i = std::min(pool_size - 1,
                            static_cast<std::size_t>(uniform01(rng) * static_cast<double>(pool_size)));
    inst.points.push_back(inst.pool->observe(i, standard_normal(rng)));
  }
  for (std::size_t k = 0; k < t; ++k) {
    ExclusionMask none;
    const BagView bag(inst.points, none);
    const FittedUtility fit = fit_utility(model, *inst.pool, warm, &bag);
    const auto dist = softmax_query(
        std::span<const double>(fit.pool_utility.data(), pool_size), inst.lambda);
    const std::size_t q = sample_query(dist, rng);
    inst.points.push_back(inst.pool->observe(q, standard_normal(rng)));
  }
  return inst;
}

namespace {

double max_abs_diff(const WeightVector& a, const WeightVector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

}  // namespace

double time_dstep_ms(const WeightInstance& instance, std::size_t depth, std::size_t repeats,
                     WeightStats* stats) {
  using clock = std::chrono::steady_clock;
  WeightOptions options;
  options.max_operations = 1e12;
  const auto start = clock::now();
  for (std::size_t r = 0; r < repeats; ++r) {
    WeightStats local;
    mfcs_dstep_weights(instance.points, *instance.evaluator, depth, options, &local);
    if (stats != nullptr && r == 0) *stats = local;
  }
  return std::chrono::duration<double, std::milli>(clock::now() - start).count() /
         static_cast<double>(std::max<std::size_t>(repeats, 1));
}

VerifyReport verify_weights(std::size_t n, std::size_t t, const std::vector<std::size_t>& depths,
                            std::size_t trials, std::uint64_t seed, double tolerance) {
  if (t < 1) throw ParameterError("verify_weights: t must be at least 1");
  double factorial = 1.0;
  for (std::size_t k = 2; k <= n + t; ++k) factorial *= static_cast<double>(k);
  if (factorial > 5040.0) {
    throw ComplexityError(fmt::format(
        "verify_weights: (n + t)! = {:.0f} exceeds 5040; the brute-force oracle is capped at 7 "
        "points",
        factorial));
  }
  for (std::size_t d : depths) {
    if (d < 1 || d > n + t) {
      throw ParameterError(fmt::format("verify_weights: depth {} outside [1, {}]", d, n + t));
    }
  }

  VerifyReport report;
  report.n = n;
  report.t = t;
  report.trials = trials;
  for (std::size_t d : depths) {
    report.depths.push_back({d, 0.0, 0, ordered_tuple_count(n + t, d), 0.0});
  }
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const WeightInstance inst = make_weight_instance(n, t, seed + trial);
    const auto joint = mfcs_joint_density(*inst.evaluator, n, {});
    const WeightVector brute = brute_force_weights(inst.points, joint, 7);
    const WeightVector exact = mfcs_exact_weights(inst.points, *inst.evaluator, n, t);
    const WeightVector full = mfcs_dstep_weights(inst.points, *inst.evaluator, t);
    report.max_brute_vs_exact = std::max(report.max_brute_vs_exact, max_abs_diff(brute, exact));
    report.max_exact_vs_full_depth =
        std::max(report.max_exact_vs_full_depth, max_abs_diff(exact, full));
    for (auto& dr : report.depths) {
      WeightStats stats;
      const auto start = std::chrono::steady_clock::now();
      const WeightVector w =
          mfcs_dstep_weights(inst.points, *inst.evaluator, dr.depth, {}, &stats);
      dr.mean_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                              start)
                        .count() /
                    static_cast<double>(trials);
      dr.max_deviation_from_exact = std::max(dr.max_deviation_from_exact, max_abs_diff(w, exact));
      dr.factor_requests = stats.factor_requests.back();
    }
  }
  report.passed =
      report.max_brute_vs_exact <= tolerance && report.max_exact_vs_full_depth <= tolerance;
  return report;
}

}  // namespace mfcs
