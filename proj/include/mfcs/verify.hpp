#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "mfcs/agents.hpp"
#include "mfcs/weights.hpp"

namespace mfcs {

/// A small multistep feedback-covariate-shift sequence: `n` uniform draws
/// from a random pool, then `t` draws from a ridge-softmax agent refit on
/// everything seen so far.
struct WeightInstance {
  std::shared_ptr<const Pool> pool;
  std::vector<LabeledPoint> points;
  std::unique_ptr<RefitQueryEvaluator> evaluator;
  std::size_t n = 0;
  std::size_t t = 0;
  double lambda = 0.0;
};

WeightInstance make_weight_instance(std::size_t n, std::size_t t, std::uint64_t seed,
                                    std::size_t pool_size = 12, std::size_t dimension = 3);

struct DepthReport {
  std::size_t depth = 0;
  double max_deviation_from_exact = 0.0;
  // Factor requests at the innermost level, per trial.
  std::uint64_t factor_requests = 0;
  double expected_requests = 0.0;
  double mean_ms = 0.0;
};

struct VerifyReport {
  std::size_t n = 0;
  std::size_t t = 0;
  std::size_t trials = 0;
  double max_brute_vs_exact = 0.0;
  double max_exact_vs_full_depth = 0.0;
  std::vector<DepthReport> depths;
  bool passed = false;
};

/// Brute force vs exact MFCS vs d = t recursion on `trials` instances.
/// Throws ComplexityError when (n + t)! > 5040.
VerifyReport verify_weights(std::size_t n, std::size_t t, const std::vector<std::size_t>& depths,
                            std::size_t trials, std::uint64_t seed, double tolerance = 1e-9);

/// Mean wall time in milliseconds of the serial d-step weights.
double time_dstep_ms(const WeightInstance& instance, std::size_t depth, std::size_t repeats,
                     WeightStats* stats = nullptr);

}  // namespace mfcs
