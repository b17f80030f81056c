#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mfcs/core.hpp"
#include "mfcs/weights.hpp"

namespace mfcs {

using PointPredictor = std::function<double(const Vector&)>;

/// Proper training set, calibration set, and the calibration residuals
/// |y_i - mu_hat(x_i)| under a model fit to the training set only.
struct SplitCalibrationState {
  Bag training;
  Bag calibration;
  std::vector<double> scores;
  PointPredictor predict;
};

SplitCalibrationState make_split_state(Bag training, Bag calibration, PointPredictor predict);

/// Calibration points followed by the test point, the layout every weight
/// routine expects. The test label is unknown, so the test entry carries a
/// zero placeholder; use only evaluators that ignore labels.
std::vector<LabeledPoint> split_weight_points(const SplitCalibrationState& state,
                                              const LabeledPoint& test_query);

/// mu_hat(x_test) +- the weighted (1 - alpha) quantile of the calibration
/// scores, with the test weight placed at +infinity.
PredictionInterval split_cp_interval(const SplitCalibrationState& state, const Vector& x_test,
                                     const WeightVector& weights, double alpha);

/// Unweighted split CP.
PredictionInterval standard_split_interval(const SplitCalibrationState& state,
                                           const Vector& x_test, double alpha);

/// Split CP with d-step MFCS weights over calibration + test.
PredictionInterval mfcs_split_interval(const SplitCalibrationState& state,
                                       const LabeledPoint& test_query,
                                       const DensityEvaluator& evaluator, std::size_t depth,
                                       double alpha, const WeightOptions& options = {});

/// Split CP with one-step feedback-covariate-shift weights (depth 1).
PredictionInterval one_step_fcs_interval(const SplitCalibrationState& state,
                                         const LabeledPoint& test_query,
                                         const DensityEvaluator& evaluator, double alpha);

/// Candidate test labels retained by full CP, with their hull.
struct LabelGridSet {
  std::vector<double> grid;
  std::vector<char> included;
  // Empty when no grid label is admitted. An endpoint is infinite when the
  // outermost grid label on that side was admitted by an infinite quantile.
  std::optional<PredictionInterval> hull;
  // Admitted labels form one unbroken run of grid points.
  bool contiguous = true;

  std::size_t count() const;
};

/// `count` evenly spaced labels over [low - 2 sigma, high + 2 sigma].
std::vector<double> make_label_grid(double low, double high, double sigma,
                                    std::size_t count = 200);

/// How weights are supplied to full CP for each imputed label.
using FullCpWeights = std::function<WeightVector(std::span<const LabeledPoint> augmented)>;

/// d-step MFCS weights under `evaluator`, computed once when the evaluator
/// ignores labels and per imputed label otherwise. The label-free cache is
/// tied to one observed bag: build a fresh function per full-CP query.
FullCpWeights dstep_full_cp_weights(const DensityEvaluator& evaluator, std::size_t depth,
                                    WeightOptions options = {});

/// Full CP membership of a single candidate label for ridge with absolute
/// residual scores.
bool full_cp_admits_ridge(const Bag& observed, const LabeledPoint& test_query, double y,
                          const FullCpWeights& weights, double alpha,
                          double regularization);

/// Full CP over a label grid for ridge regression. Residuals come from the
/// closed-form affine path, so no per-label refits are needed.
LabelGridSet full_cp_set_ridge(const Bag& observed, const LabeledPoint& test_query,
                               const FullCpWeights& weights, double alpha,
                               std::span<const double> grid, double regularization);

LabelGridSet full_cp_set_ridge(const Bag& observed, const LabeledPoint& test_query,
                               const DensityEvaluator& evaluator, std::size_t depth,
                               double alpha, std::span<const double> grid,
                               double regularization, const WeightOptions& options = {});

inline constexpr double kAciDefaultStep = 0.005;
inline constexpr double kAciAlphaFloor = 0.001;
inline constexpr double kAciAlphaCeiling = 0.999;

struct AciState {
  double alpha_t = 0.1;
  double step_size = kAciDefaultStep;
  double target_alpha = 0.1;
};

AciState aci_start(double target_alpha, double step_size = kAciDefaultStep);

/// alpha_{t+1} = alpha_t + step * (target - err_t).
AciState aci_update(const AciState& state, bool miscovered);

/// alpha_t clipped to [0.001, 0.999] for quantile evaluation.
double aci_effective_alpha(const AciState& state) noexcept;

}  // namespace mfcs
