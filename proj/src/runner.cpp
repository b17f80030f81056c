#include <omp.h>

#include "mfcs/sim.hpp"

namespace mfcs {

std::vector<SeedResult> run_seeds(const ExperimentConfig& config, int threads) {
  const Pool pool = make_experiment_pool(config);
  const std::uint64_t count = config.seed_end - config.seed_begin + 1;
  std::vector<SeedResult> results(count);
  const int team = threads > 0 ? threads : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic, 1) num_threads(team)
  for (std::int64_t k = 0; k < static_cast<std::int64_t>(count); ++k) {
    auto& slot = results[static_cast<std::size_t>(k)];
    slot.seed = config.seed_begin + static_cast<std::uint64_t>(k);
    try {
      slot.records = run_experiment(config, pool, slot.seed);
    } catch (const std::exception& e) {
      slot.records.clear();
      slot.error = e.what();
    }
  }
  return results;
}

}  // namespace mfcs
