#include <omp.h>

#include <exception>
#include <memory>

#include "mfcs/weights.hpp"
#include "weights_detail.hpp"

namespace mfcs {

WeightVector mfcs_dstep_weights_omp(std::span<const LabeledPoint> points,
                                    const DensityEvaluator& evaluator, std::size_t depth,
                                    const WeightOptions& options, WeightStats* stats,
                                    int threads) {
  detail::check_dstep_arguments(points, depth, options);
  const int team = threads > 0 ? threads : omp_get_max_threads();
  const auto m = static_cast<std::ptrdiff_t>(points.size());

  std::vector<double> raw(points.size(), 0.0);
  std::vector<std::unique_ptr<detail::FactorCache>> caches(static_cast<std::size_t>(team));
  std::exception_ptr failure;

#pragma omp parallel num_threads(team)
  {
    const auto tid = static_cast<std::size_t>(omp_get_thread_num());
    caches[tid] =
        std::make_unique<detail::FactorCache>(points, evaluator, options.memoize, depth);
    auto& cache = *caches[tid];

#pragma omp for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < m; ++i) {
      try {
        raw[static_cast<std::size_t>(i)] =
            detail::dstep_numerator(points, static_cast<std::size_t>(i), depth, options, cache);
      } catch (...) {
#pragma omp critical(mfcs_dstep_failure)
        if (!failure) failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);

  for (const auto& cache : caches) {
    if (cache) detail::merge_stats(stats, *cache);
  }
  // Each numerator is computed by the same routine as the serial path and
  // normalization runs in index order, so the result does not depend on the
  // thread count.
  return WeightVector::normalize(std::move(raw));
}

}  // namespace mfcs
