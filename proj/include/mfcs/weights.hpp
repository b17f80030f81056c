#pragma once

#include <bitset>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mfcs/core.hpp"

namespace mfcs {

// Upper bound on the number of calibration + test points handled by the
// weight routines (the width of the exclusion bitmask).
inline constexpr std::size_t kMaxWeightPoints = 512;
using ExclusionMask = std::bitset<kMaxWeightPoints>;

/// The multiset `universe \ excluded`, viewed without copying.
class BagView {
 public:
  BagView(std::span<const LabeledPoint> universe, const ExclusionMask& excluded)
      : universe_(universe), excluded_(&excluded) {}

  std::size_t size() const noexcept { return universe_.size() - excluded_->count(); }
  bool empty() const noexcept { return size() == 0; }
  std::span<const LabeledPoint> universe() const noexcept { return universe_; }
  bool is_excluded(std::size_t i) const { return (*excluded_)[i]; }

  template <class F>
  void for_each(F&& f) const {
    for (std::size_t i = 0; i < universe_.size(); ++i) {
      if (!(*excluded_)[i]) f(universe_[i]);
    }
  }

  Bag materialize() const;

 private:
  std::span<const LabeledPoint> universe_;
  const ExclusionMask* excluded_;
};

/// Query probability p(x | conditioning bag) of an agent that treats its
/// conditioning data symmetrically. Implementations must be safe to call
/// concurrently from several threads.
class DensityEvaluator {
 public:
  virtual ~DensityEvaluator() = default;

  virtual double density(const LabeledPoint& query, const BagView& conditioning) const = 0;

  // False when the density ignores the labels of the conditioning points, so
  // weights can be reused across imputed test labels.
  virtual bool depends_on_labels() const { return true; }
};

/// Constant density; every dynamic factor cancels.
class UniformEvaluator final : public DensityEvaluator {
 public:
  explicit UniformEvaluator(double value = 1.0) : value_(value) {}
  double density(const LabeledPoint&, const BagView&) const override { return value_; }
  bool depends_on_labels() const override { return false; }

 private:
  double value_;
};

/// Joint density of an ordered sequence of points; only ratios matter.
using JointDensity = std::function<double(std::span<const LabeledPoint>)>;

/// Marginal density of a point, used for the IID-initialization factors.
using PointDensity = std::function<double(const LabeledPoint&)>;

/// Normalized nonnegative weights, calibration points first and the test
/// point last.
class WeightVector {
 public:
  WeightVector() = default;
  // Normalizes `raw`. All-equal entries produce exactly 1/m each.
  // Throws DegenerateDensityError when the total is zero.
  static WeightVector normalize(std::vector<double> raw);
  static WeightVector uniform(std::size_t m);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  double test_weight() const { return values_.back(); }

 private:
  explicit WeightVector(std::vector<double> v) : values_(std::move(v)) {}
  std::vector<double> values_;
};

struct WeightOptions {
  // Cap on the number of dynamic-factor products (the closed-form operation
  // count of the requested computation).
  double max_operations = 5e7;
  // Cache p(x_i | z_-K) keyed by (i, K).
  bool memoize = true;
  // When set, IID-initialization factors are multiplied back in instead of
  // being cancelled (only needed for non-uniform initial densities).
  PointDensity initial_density;
};

/// Instrumentation filled by the MFCS routines.
struct WeightStats {
  // factor_requests[k-1]: dynamic factors requested at recursion depth k.
  std::vector<std::uint64_t> factor_requests;
  // Requests that reached the evaluator (cache misses).
  std::uint64_t evaluator_calls = 0;

  std::uint64_t total_requests() const;
};

/// Number of ordered index tuples (i_1, ..., i_d) of distinct indices out of
/// m points: m (m-1) ... (m-d+1).
double ordered_tuple_count(std::size_t m, std::size_t d) noexcept;

/// Exact conformal weights by enumerating all m! orderings of `points`.
/// weights[i] is the share of total density carried by orderings that put
/// point i last.
WeightVector brute_force_weights(std::span<const LabeledPoint> points, const JointDensity& f,
                                 std::size_t max_points = 8);

/// Joint density of a sequence generated under multistep feedback covariate
/// shift: positions after `n_initial` are drawn from `evaluator` given the
/// prefix, labels from `label_density`. Positions up to `n_initial` use
/// `initial_density` when given, and contribute 1 otherwise.
JointDensity mfcs_joint_density(const DensityEvaluator& evaluator, std::size_t n_initial,
                                PointDensity label_density, PointDensity initial_density = {});

/// Exact MFCS weights for `n_initial` IID points followed by `steps` points
/// drawn from the evaluator. Enumerates every ordered assignment of the
/// dynamic positions.
WeightVector mfcs_exact_weights(std::span<const LabeledPoint> points,
                                const DensityEvaluator& evaluator, std::size_t n_initial,
                                std::size_t steps, const WeightOptions& options = {},
                                WeightStats* stats = nullptr);

/// d-step MFCS weights via the symmetric-agent recursion: the depth-1 factor
/// p(x_i | z_-{i}), then nested sums over the remaining indices down to
/// `depth` levels. Serial reference implementation.
WeightVector mfcs_dstep_weights(std::span<const LabeledPoint> points,
                                const DensityEvaluator& evaluator, std::size_t depth,
                                const WeightOptions& options = {}, WeightStats* stats = nullptr);

/// Same weights as mfcs_dstep_weights, with the outermost index split across
/// OpenMP threads (one evaluator cache per thread). Results are bitwise equal
/// to the serial routine for any thread count. `threads` <= 0 uses the
/// OpenMP default.
WeightVector mfcs_dstep_weights_omp(std::span<const LabeledPoint> points,
                                    const DensityEvaluator& evaluator, std::size_t depth,
                                    const WeightOptions& options = {},
                                    WeightStats* stats = nullptr, int threads = 0);

}  // namespace mfcs
