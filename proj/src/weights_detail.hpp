#pragma once

#include <unordered_map>

#include "mfcs/weights.hpp"

namespace mfcs::detail {

struct FactorKey {
  ExclusionMask excluded;
  std::uint32_t point;

  bool operator==(const FactorKey&) const = default;
};

struct FactorKeyHash {
  std::size_t operator()(const FactorKey& k) const noexcept {
    const std::size_t h = std::hash<ExclusionMask>{}(k.excluded);
    return h ^ (static_cast<std::size_t>(k.point) * 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  }
};

/// Evaluates p(x_point | universe \ excluded) with optional memoization and
/// per-depth request counting. One instance per thread.
class FactorCache {
 public:
  FactorCache(std::span<const LabeledPoint> points, const DensityEvaluator& evaluator,
              bool memoize, std::size_t max_depth)
      : points_(points), evaluator_(evaluator), memoize_(memoize), requests_(max_depth, 0) {}

  // `excluded` must already contain `point`. `depth` is 1-based.
  double factor(std::size_t point, const ExclusionMask& excluded, std::size_t depth) {
    ++requests_[depth - 1];
    if (!memoize_) return evaluate(point, excluded);
    FactorKey key{excluded, static_cast<std::uint32_t>(point)};
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const double v = evaluate(point, excluded);
    cache_.emplace(std::move(key), v);
    return v;
  }

  const std::vector<std::uint64_t>& requests() const noexcept { return requests_; }
  std::uint64_t evaluator_calls() const noexcept { return calls_; }

 private:
  double evaluate(std::size_t point, const ExclusionMask& excluded) {
    ++calls_;
    const double v = evaluator_.density(points_[point], BagView(points_, excluded));
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw NumericalError("density evaluator returned a negative or non-finite value");
    }
    return v;
  }

  std::span<const LabeledPoint> points_;
  const DensityEvaluator& evaluator_;
  bool memoize_;
  std::vector<std::uint64_t> requests_;
  std::uint64_t calls_ = 0;
  std::unordered_map<FactorKey, double, FactorKeyHash> cache_;
};

/// Product of the initial density over the points not in `excluded`.
double initial_factor(std::span<const LabeledPoint> points, const ExclusionMask& excluded,
                      const PointDensity& initial_density);

/// Unnormalized d-step numerator for outermost index `first`.
double dstep_numerator(std::span<const LabeledPoint> points, std::size_t first,
                       std::size_t depth, const WeightOptions& options, FactorCache& cache);

void check_dstep_arguments(std::span<const LabeledPoint> points, std::size_t depth,
                           const WeightOptions& options);

void merge_stats(WeightStats* stats, const FactorCache& cache);

}  // namespace mfcs::detail
