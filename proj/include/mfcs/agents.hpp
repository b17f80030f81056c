#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "mfcs/core.hpp"
#include "mfcs/conformal.hpp"
#include "mfcs/predictors.hpp"
#include "mfcs/weights.hpp"

namespace mfcs {

/// Finite candidate pool with hidden labels. Row i of `features` is
/// candidate i.
struct Pool {
  Matrix features;
  Vector true_label;
  Vector noise_sd;

  std::size_t size() const noexcept { return static_cast<std::size_t>(features.rows()); }
  Eigen::Index dimension() const noexcept { return features.cols(); }
  Vector candidate(std::size_t i) const { return features.row(static_cast<Eigen::Index>(i)); }

  // Candidate i with label true_label[i] + noise_sd[i] * standard_normal.
  LabeledPoint observe(std::size_t i, double standard_normal) const;
  // The candidates at `indices`, renumbered 0..k-1.
  Pool subset(std::span<const std::size_t> indices) const;
  // Throws ShapeError / ParameterError when the invariants fail.
  void validate() const;
};

struct QueryDistribution {
  std::vector<double> probs;
  double lambda = 0.0;
  // Cap on exp(lambda * u) in the original scale (may overflow to inf for
  // large lambda * u; bound_relative stays exact).
  std::optional<double> bound;
  std::optional<double> bound_relative;
};

/// probs[i] proportional to exp(lambda * u_i).
QueryDistribution softmax_query(std::span<const double> utilities, double lambda);

/// probs[i] proportional to min(exp(lambda * u_i), B) with B the largest pool
/// value b such that b / (sum_cal min(exp(lambda * u_cal), b) + b) < alpha.
/// Throws BoundInfeasibleError when no pool value qualifies.
QueryDistribution bounded_query(std::span<const double> utilities,
                                std::span<const double> cal_utilities, double lambda,
                                double alpha);

/// Inverse-CDF draw; consumes exactly one 64-bit output of `rng`.
std::size_t sample_query(const QueryDistribution& dist, std::mt19937_64& rng);

enum class PredictorKind { kRidge, kGp };
enum class UtilityKind { kPredictedMean, kPosteriorVariance };

struct UtilityModel {
  PredictorKind predictor = PredictorKind::kRidge;
  UtilityKind utility = UtilityKind::kPredictedMean;
  double ridge_regularization = kDefaultRidgeRegularization;
  GpKernel kernel;
};

struct FittedUtility {
  Vector pool_utility;
  Vector pool_mean;
  PointPredictor predict;
};

/// Fits the configured predictor on `fixed` plus the optional `extra` bag
/// and scores every pool candidate.
FittedUtility fit_utility(const UtilityModel& model, const Pool& pool, const Bag& fixed,
                          const BagView* extra = nullptr);

/// Query probabilities an agent actually used, looked up by the size of the
/// conditioning calibration bag. Size s maps to the proposal in force when
/// the calibration set had s points and the query joined it; the current
/// step is registered at the current calibration size.
class HistoricalQueryEvaluator final : public DensityEvaluator {
 public:
  void record(std::size_t calibration_size, std::shared_ptr<const std::vector<double>> probs);
  double density(const LabeledPoint& query, const BagView& conditioning) const override;
  bool depends_on_labels() const override { return false; }
  // Largest depth usable for a universe of `universe_size` points.
  std::size_t available_depth(std::size_t universe_size) const;

 private:
  std::map<std::size_t, std::shared_ptr<const std::vector<double>>> by_size_;
};

/// Query probabilities recomputed by refitting the agent's model on
/// `fixed` plus the conditioning bag.
class RefitQueryEvaluator final : public DensityEvaluator {
 public:
  RefitQueryEvaluator(const Pool& pool, Bag fixed, UtilityModel model, double lambda,
                      std::optional<double> bound_alpha = std::nullopt);
  double density(const LabeledPoint& query, const BagView& conditioning) const override;
  bool depends_on_labels() const override {
    return model_.utility == UtilityKind::kPredictedMean;
  }

 private:
  const Pool& pool_;
  Bag fixed_;
  UtilityModel model_;
  double lambda_;
  std::optional<double> bound_alpha_;
};

/// Proposal distribution shared by the simulation loops: bounded against
/// `cal_utilities` when `bound_alpha` is set, falling back to the plain
/// softmax (bound fields left empty) when the bound is infeasible.
QueryDistribution propose(std::span<const double> utilities, std::span<const double> cal_utilities,
                          double lambda, std::optional<double> bound_alpha);

}  // namespace mfcs
