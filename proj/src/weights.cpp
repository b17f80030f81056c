#include "mfcs/weights.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "weights_detail.hpp"

namespace mfcs {

Bag BagView::materialize() const {
  Bag bag;
  for_each([&](const LabeledPoint& p) { bag.add(p); });
  return bag;
}

WeightVector WeightVector::normalize(std::vector<double> raw) {
  if (raw.empty()) throw ShapeError("WeightVector::normalize: empty weight vector");
  for (double v : raw) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw NumericalError("WeightVector::normalize: raw weights must be finite and nonnegative");
    }
  }
  const double total = compensated_total(raw);
  if (!(total > 0.0)) {
    throw DegenerateDensityError("WeightVector::normalize: all raw weights are zero");
  }
  // Exchangeable inputs yield bitwise-identical numerators; emit the exact
  // uniform weights so downstream quantiles match the unweighted method.
  if (std::all_of(raw.begin(), raw.end(), [&](double v) { return v == raw.front(); })) {
    return uniform(raw.size());
  }
  for (double& v : raw) v /= total;
  return WeightVector(std::move(raw));
}

WeightVector WeightVector::uniform(std::size_t m) {
  if (m == 0) throw ShapeError("WeightVector::uniform: m must be positive");
  return WeightVector(std::vector<double>(m, 1.0 / static_cast<double>(m)));
}

std::uint64_t WeightStats::total_requests() const {
  return std::accumulate(factor_requests.begin(), factor_requests.end(), std::uint64_t{0});
}

double ordered_tuple_count(std::size_t m, std::size_t d) noexcept {
  double count = 1.0;
  for (std::size_t k = 0; k < d && k < m; ++k) count *= static_cast<double>(m - k);
  return d > m ? 0.0 : count;
}

WeightVector brute_force_weights(std::span<const LabeledPoint> points, const JointDensity& f,
                                 std::size_t max_points) {
  const std::size_t m = points.size();
  if (m == 0) throw ShapeError("brute_force_weights: no points");
  if (m > max_points) {
    throw ComplexityError(fmt::format(
        "brute_force_weights: {} points exceeds the enumeration cap of {} ({}! orderings); "
        "use the MFCS or d-step weights instead",
        m, max_points, m));
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::vector<LabeledPoint> sequence(m);
  std::vector<CompensatedSum> by_last(m);
  do {
    for (std::size_t j = 0; j < m; ++j) sequence[j] = points[order[j]];
    const double value = f(sequence);
    if (!(value >= 0.0) || !std::isfinite(value)) {
      throw NumericalError("brute_force_weights: joint density must be finite and nonnegative");
    }
    by_last[order.back()].add(value);
  } while (std::next_permutation(order.begin(), order.end()));

  std::vector<double> raw(m);
  for (std::size_t i = 0; i < m; ++i) raw[i] = by_last[i].value();
  return WeightVector::normalize(std::move(raw));
}

JointDensity mfcs_joint_density(const DensityEvaluator& evaluator, std::size_t n_initial,
                                PointDensity label_density, PointDensity initial_density) {
  return [&evaluator, n_initial, label_density = std::move(label_density),
          initial_density = std::move(initial_density)](std::span<const LabeledPoint> seq) {
    if (seq.size() > kMaxWeightPoints) throw ShapeError("mfcs_joint_density: sequence too long");
    double value = 1.0;
    ExclusionMask later;
    for (std::size_t j = 0; j < seq.size(); ++j) later.set(j);
    for (std::size_t j = 0; j < seq.size(); ++j) {
      // Conditioning set for position j is the prefix seq[0..j).
      if (j >= n_initial) {
        value *= evaluator.density(seq[j], BagView(seq, later));
      } else if (initial_density) {
        value *= initial_density(seq[j]);
      }
      later.reset(j);
      if (label_density) value *= label_density(seq[j]);
    }
    return value;
  };
}

namespace detail {

double initial_factor(std::span<const LabeledPoint> points, const ExclusionMask& excluded,
                      const PointDensity& initial_density) {
  double value = 1.0;
  for (std::size_t l = 0; l < points.size(); ++l) {
    if (!excluded[l]) value *= initial_density(points[l]);
  }
  return value;
}

namespace {

// Sum over i not in `excluded` of p(x_i | z_-(excluded+i)) times the deeper
// levels; `level` is the depth of the factors summed here.
double dstep_level(std::span<const LabeledPoint> points, ExclusionMask& excluded,
                   std::size_t level, const WeightOptions& options, FactorCache& cache) {
  if (level > cache.requests().size()) {
    return options.initial_density ? initial_factor(points, excluded, options.initial_density)
                                   : 1.0;
  }
  CompensatedSum sum;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (excluded[i]) continue;
    excluded.set(i);
    const double f = cache.factor(i, excluded, level);
    sum.add(f * dstep_level(points, excluded, level + 1, options, cache));
    excluded.reset(i);
  }
  return sum.value();
}

}  // namespace

double dstep_numerator(std::span<const LabeledPoint> points, std::size_t first,
                       std::size_t depth, const WeightOptions& options, FactorCache& cache) {
  ExclusionMask excluded;
  excluded.set(first);
  const double head = cache.factor(first, excluded, 1);
  if (depth == 1) {
    return options.initial_density
               ? head * initial_factor(points, excluded, options.initial_density)
               : head;
  }
  return head * dstep_level(points, excluded, 2, options, cache);
}

void check_dstep_arguments(std::span<const LabeledPoint> points, std::size_t depth,
                           const WeightOptions& options) {
  if (points.empty()) throw ShapeError("mfcs_dstep_weights: no points");
  if (points.size() > kMaxWeightPoints) {
    throw ShapeError(fmt::format("mfcs_dstep_weights: {} points exceeds the supported {}",
                                 points.size(), kMaxWeightPoints));
  }
  if (depth < 1 || depth > points.size()) {
    throw ParameterError(fmt::format("mfcs_dstep_weights: depth {} outside [1, {}]", depth,
                                     points.size()));
  }
  const double ops = ordered_tuple_count(points.size(), depth);
  if (ops > options.max_operations) {
    throw ComplexityError(fmt::format(
        "mfcs_dstep_weights: depth {} over {} points needs {:.3g} factor products, above the "
        "cap of {:.3g}; use a smaller depth",
        depth, points.size(), ops, options.max_operations));
  }
}

void merge_stats(WeightStats* stats, const FactorCache& cache) {
  if (stats == nullptr) return;
  if (stats->factor_requests.size() < cache.requests().size()) {
    stats->factor_requests.resize(cache.requests().size(), 0);
  }
  for (std::size_t k = 0; k < cache.requests().size(); ++k) {
    stats->factor_requests[k] += cache.requests()[k];
  }
  stats->evaluator_calls += cache.evaluator_calls();
}

}  // namespace detail

WeightVector mfcs_dstep_weights(std::span<const LabeledPoint> points,
                                const DensityEvaluator& evaluator, std::size_t depth,
                                const WeightOptions& options, WeightStats* stats) {
  detail::check_dstep_arguments(points, depth, options);
  detail::FactorCache cache(points, evaluator, options.memoize, depth);
  std::vector<double> raw(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    raw[i] = detail::dstep_numerator(points, i, depth, options, cache);
  }
  detail::merge_stats(stats, cache);
  return WeightVector::normalize(std::move(raw));
}

WeightVector mfcs_exact_weights(std::span<const LabeledPoint> points,
                                const DensityEvaluator& evaluator, std::size_t n_initial,
                                std::size_t steps, const WeightOptions& options,
                                WeightStats* stats) {
  const std::size_t m = points.size();
  if (steps < 1) throw ParameterError("mfcs_exact_weights: steps must be >= 1");
  if (m != n_initial + steps) {
    throw ShapeError(fmt::format("mfcs_exact_weights: {} points but n + t = {}", m,
                                 n_initial + steps));
  }
  if (m > kMaxWeightPoints) throw ShapeError("mfcs_exact_weights: too many points");
  const double ops = ordered_tuple_count(m, steps);
  if (ops > options.max_operations) {
    throw ComplexityError(fmt::format(
        "mfcs_exact_weights: exact weights for t = {} need {:.3g} orderings, above the cap of "
        "{:.3g}; use the d-step estimate with a smaller depth",
        steps, ops, options.max_operations));
  }

  // Enumerate every ordered assignment (s_1, ..., s_t) of distinct indices to
  // the dynamic positions n+1, ..., n+t, odometer style.
  detail::FactorCache cache(points, evaluator, options.memoize, steps);
  std::vector<CompensatedSum> by_last(m);
  std::vector<std::size_t> slot(steps, 0);
  std::vector<bool> used(m, false);

  // Advances slot[k..] to the lexicographically next valid assignment.
  auto settle = [&](std::size_t from) {
    for (std::size_t k = from; k < steps; ++k) {
      std::size_t c = 0;
      while (used[c]) ++c;
      slot[k] = c;
      used[c] = true;
    }
  };
  settle(0);

  while (true) {
    // Forward product over time: position n+j conditions on everything not
    // placed at n+j or later.
    ExclusionMask later;
    for (std::size_t k = 0; k < steps; ++k) later.set(slot[k]);
    double product = 1.0;
    for (std::size_t k = 0; k < steps; ++k) {
      // Depth counted from the test position backwards.
      product *= cache.factor(slot[k], later, steps - k);
      later.reset(slot[k]);
    }
    if (options.initial_density) {
      ExclusionMask dynamic;
      for (std::size_t k = 0; k < steps; ++k) dynamic.set(slot[k]);
      product *= detail::initial_factor(points, dynamic, options.initial_density);
    }
    by_last[slot.back()].add(product);

    // Next tuple: bump the rightmost slot that can move.
    std::size_t k = steps;
    bool advanced = false;
    while (k > 0) {
      --k;
      used[slot[k]] = false;
      std::size_t c = slot[k] + 1;
      while (c < m && used[c]) ++c;
      if (c < m) {
        slot[k] = c;
        used[c] = true;
        settle(k + 1);
        advanced = true;
        break;
      }
    }
    if (!advanced) break;
  }

  detail::merge_stats(stats, cache);
  std::vector<double> raw(m);
  for (std::size_t i = 0; i < m; ++i) raw[i] = by_last[i].value();
  return WeightVector::normalize(std::move(raw));
}

}  // namespace mfcs
