#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "mfcs/agents.hpp"
#include "mfcs/conformal.hpp"
#include "mfcs/core.hpp"

namespace mfcs {

// Named sub-streams of a root seed. Each stream is independent of which
// methods are enabled, so the data trajectory of a seed never changes when
// the method list does.
std::mt19937_64 make_stream(std::uint64_t root_seed, std::string_view name);
double uniform01(std::mt19937_64& rng);
double standard_normal(std::mt19937_64& rng);

struct CombinatorialPoolSpec {
  std::size_t length = 8;
  std::size_t interaction_order = 2;
  double interaction_scale = 0.5;
  double noise_scale = 0.1;
  std::uint64_t seed = 7;
};

/// All 2^L vectors in {-1, +1}^L. Labels are a seeded polynomial in the
/// features with terms up to `interaction_order`, standardized over the pool
/// to mean 0 and unit variance.
Pool make_combinatorial_pool(const CombinatorialPoolSpec& spec);

struct RegressionPoolSpec {
  std::size_t size = 1024;
  std::size_t dimension = 6;
  // Feature k is feature_scale / (1 + k) times a Student-t draw with
  // `tail_dof` degrees of freedom (Gaussian when tail_dof is 0). The decaying
  // scales give a well separated first principal component.
  double feature_scale = 1.0;
  double tail_dof = 3.0;
  double nonlinearity = 1.0;
  double noise_scale = 0.1;
  std::uint64_t seed = 11;
};

/// Heavy-tailed features with decaying per-axis scales and a standardized
/// label: a linear term plus bounded sinusoidal terms.
Pool make_regression_pool(const RegressionPoolSpec& spec);

/// Leading eigenvector of the pool's feature covariance by power iteration,
/// with the sign fixed so its largest-magnitude entry is positive.
Vector first_principal_direction(const Matrix& features, double tolerance = 1e-10,
                                 std::size_t max_iterations = 10000);

/// Samples `n` distinct pool indices with probability proportional to
/// exp(gamma * v), v the min-max normed first principal component score.
std::vector<std::size_t> biased_iid_init(const Pool& pool, std::size_t n, double gamma,
                                         std::mt19937_64& rng);

enum class ExperimentMode { kDesign, kActiveLearning };
enum class CpVariant { kSplit, kFull };
// Split CP only: which query probabilities enter the weights.
enum class SplitConditioning { kHistorical, kRefit };
// Full CP only: labels of past queries seen by the weight evaluator.
enum class ConditioningLabels { kObserved, kTrue };

struct ExperimentConfig {
  ExperimentMode mode = ExperimentMode::kDesign;
  CpVariant cp = CpVariant::kSplit;
  PredictorKind predictor = PredictorKind::kRidge;
  std::vector<std::string> methods{"standard", "one-step", "mfcs", "aci"};
  std::vector<std::size_t> depths{2};
  double alpha = 0.1;
  std::size_t n_train = 32;
  std::size_t n_cal = 32;
  double lambda = 5.0;
  std::size_t steps = 5;
  double aci_step = kAciDefaultStep;
  double cal_assignment_prob = 0.5;
  double gamma_init_bias = 0.0;
  bool bounded = false;
  SplitConditioning split_conditioning = SplitConditioning::kHistorical;
  ConditioningLabels conditioning_labels = ConditioningLabels::kObserved;

  CombinatorialPoolSpec design_pool;
  RegressionPoolSpec regression_pool;
  std::size_t holdout = 250;

  double ridge_regularization = kDefaultRidgeRegularization;
  GpKernel kernel;
  std::size_t grid_size = 200;
  double max_operations = 5e7;

  std::uint64_t seed_begin = 0;
  std::uint64_t seed_end = 0;  // inclusive
  bool wall_time = true;

  // Expanded method labels in record order, e.g. "mfcs-d2".
  std::vector<std::string> method_labels() const;
  // Throws ParameterError naming the first invalid field.
  void validate() const;
};

struct StepRecord {
  std::uint64_t seed = 0;
  std::size_t t = 0;
  std::string method;
  bool covered = false;
  ExtendedReal width;
  double metric = 0.0;
  std::optional<double> bound_relative;
  std::optional<double> wall_ms;

  // Not serialized; kept for checks.
  PredictionInterval interval;
  double label = 0.0;
  double prediction = 0.0;
  bool contiguous = true;
  std::size_t depth_used = 0;
};

/// Candidate pool shared by every seed of a run.
Pool make_experiment_pool(const ExperimentConfig& config);

std::vector<StepRecord> run_design_experiment(const ExperimentConfig& config, const Pool& pool,
                                              std::uint64_t seed);
std::vector<StepRecord> run_active_learning_experiment(const ExperimentConfig& config,
                                                       const Pool& pool, std::uint64_t seed);
std::vector<StepRecord> run_experiment(const ExperimentConfig& config, const Pool& pool,
                                       std::uint64_t seed);

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<StepRecord> records;
  std::optional<std::string> error;
};

/// Runs seeds [seed_begin, seed_end] across `threads` OpenMP threads and
/// returns results in seed order.
std::vector<SeedResult> run_seeds(const ExperimentConfig& config, int threads);

struct SummaryRow {
  std::string method;
  std::size_t t = 0;
  std::size_t n = 0;
  double coverage_mean = 0.0;
  double coverage_se = 0.0;
  ExtendedReal width_median;
  ExtendedReal width_q25;
  ExtendedReal width_q75;
  double metric_mean = 0.0;
  double metric_se = 0.0;
  double inf_fraction = 0.0;
  std::optional<double> bound_relative_mean;
};

/// Linear-interpolated quantile of sorted values where +inf sorts last and
/// any interpolation touching +inf is +inf.
ExtendedReal order_statistic_quantile(std::vector<ExtendedReal> values, double q);

/// One row per (method, t): methods in first-appearance order, t ascending.
std::vector<SummaryRow> aggregate(const std::vector<StepRecord>& records);

}  // namespace mfcs
