#include "mfcs/conformal.hpp"

#include <algorithm>
#include <memory>

#include <fmt/format.h>

#include "mfcs/predictors.hpp"

namespace mfcs {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ParameterError(fmt::format("alpha must lie in (0, 1), got {}", alpha));
  }
}

void require_label_free(const DensityEvaluator& evaluator) {
  if (evaluator.depends_on_labels()) {
    throw ParameterError(
        "split CP weights need an evaluator that ignores labels: the test label is unknown");
  }
}

}  // namespace

SplitCalibrationState make_split_state(Bag training, Bag calibration, PointPredictor predict) {
  if (calibration.empty()) throw ShapeError("make_split_state: empty calibration set");
  SplitCalibrationState state{std::move(training), std::move(calibration), {}, std::move(predict)};
  state.scores.reserve(state.calibration.size());
  for (const auto& p : state.calibration) {
    state.scores.push_back(std::fabs(p.y - state.predict(p.x)));
  }
  return state;
}

std::vector<LabeledPoint> split_weight_points(const SplitCalibrationState& state,
                                              const LabeledPoint& test_query) {
  std::vector<LabeledPoint> pts(state.calibration.begin(), state.calibration.end());
  pts.push_back(LabeledPoint{test_query.x, 0.0, test_query.source});
  return pts;
}

PredictionInterval split_cp_interval(const SplitCalibrationState& state, const Vector& x_test,
                                     const WeightVector& weights, double alpha) {
  check_alpha(alpha);
  if (weights.size() != state.scores.size() + 1) {
    throw ShapeError(fmt::format("split_cp_interval: {} weights for {} calibration scores",
                                 weights.size(), state.scores.size()));
  }
  const auto dist = WeightedScoreDistribution::from_scores(state.scores, weights.values());
  return interval_from_residual_quantile(state.predict(x_test), weighted_quantile(dist, 1.0 - alpha));
}

PredictionInterval standard_split_interval(const SplitCalibrationState& state,
                                           const Vector& x_test, double alpha) {
  return split_cp_interval(state, x_test, WeightVector::uniform(state.scores.size() + 1), alpha);
}

PredictionInterval mfcs_split_interval(const SplitCalibrationState& state,
                                       const LabeledPoint& test_query,
                                       const DensityEvaluator& evaluator, std::size_t depth,
                                       double alpha, const WeightOptions& options) {
  require_label_free(evaluator);
  const auto pts = split_weight_points(state, test_query);
  return split_cp_interval(state, test_query.x,
                           mfcs_dstep_weights(pts, evaluator, depth, options), alpha);
}

PredictionInterval one_step_fcs_interval(const SplitCalibrationState& state,
                                         const LabeledPoint& test_query,
                                         const DensityEvaluator& evaluator, double alpha) {
  return mfcs_split_interval(state, test_query, evaluator, 1, alpha);
}

std::size_t LabelGridSet::count() const {
  return static_cast<std::size_t>(std::count(included.begin(), included.end(), char{1}));
}

std::vector<double> make_label_grid(double low, double high, double sigma, std::size_t count) {
  if (count < 2) throw ParameterError("make_label_grid: need at least two grid points");
  if (!(high >= low) || !(sigma >= 0.0)) {
    throw ParameterError("make_label_grid: empty label range");
  }
  const double a = low - 2.0 * sigma;
  const double b = high + 2.0 * sigma;
  std::vector<double> grid(count);
  for (std::size_t k = 0; k < count; ++k) {
    grid[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(count - 1);
  }
  return grid;
}

FullCpWeights dstep_full_cp_weights(const DensityEvaluator& evaluator, std::size_t depth,
                                    WeightOptions options) {
  if (evaluator.depends_on_labels()) {
    return [&evaluator, depth, options](std::span<const LabeledPoint> pts) {
      return mfcs_dstep_weights(pts, evaluator, depth, options);
    };
  }
  // Label-free evaluators see the same bags for every imputed label.
  auto cached = std::make_shared<std::optional<WeightVector>>();
  return [&evaluator, depth, options, cached](std::span<const LabeledPoint> pts) {
    if (!*cached) *cached = mfcs_dstep_weights(pts, evaluator, depth, options);
    return **cached;
  };
}

namespace {

struct Membership {
  bool admitted = false;
  bool by_infinity = false;
};

Membership admits(const ResidualAffine& affine, std::vector<LabeledPoint>& augmented, double y,
                  const FullCpWeights& weights, double alpha) {
  const std::size_t n = affine.size() - 1;
  augmented.back().y = y;
  const WeightVector w = weights(augmented);
  if (w.size() != n + 1) throw ShapeError("full CP: weight vector length mismatch");
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) scores[i] = affine.score(i, y);
  const auto dist = WeightedScoreDistribution::from_scores(scores, w.values());
  const ExtendedReal q = weighted_quantile(dist, 1.0 - alpha);
  if (q.is_plus_infinity()) return {true, true};
  return {affine.score(n, y) <= q.value(), false};
}

std::vector<LabeledPoint> augmented_points(const Bag& observed, const LabeledPoint& test_query) {
  std::vector<LabeledPoint> pts(observed.begin(), observed.end());
  pts.push_back(LabeledPoint{test_query.x, 0.0, test_query.source});
  return pts;
}

}  // namespace

bool full_cp_admits_ridge(const Bag& observed, const LabeledPoint& test_query, double y,
                          const FullCpWeights& weights, double alpha, double regularization) {
  check_alpha(alpha);
  const ResidualAffine affine = ridge_residual_affine(observed, test_query.x, regularization);
  auto pts = augmented_points(observed, test_query);
  return admits(affine, pts, y, weights, alpha).admitted;
}

LabelGridSet full_cp_set_ridge(const Bag& observed, const LabeledPoint& test_query,
                               const FullCpWeights& weights, double alpha,
                               std::span<const double> grid, double regularization) {
  check_alpha(alpha);
  if (grid.empty()) throw ParameterError("full_cp_set_ridge: empty label grid");
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw ParameterError("full_cp_set_ridge: label grid must be sorted");
  }
  const ResidualAffine affine = ridge_residual_affine(observed, test_query.x, regularization);
  auto pts = augmented_points(observed, test_query);

  LabelGridSet out;
  out.grid.assign(grid.begin(), grid.end());
  out.included.assign(grid.size(), 0);
  std::vector<Membership> member(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    member[k] = admits(affine, pts, grid[k], weights, alpha);
    out.included[k] = member[k].admitted ? 1 : 0;
  }

  const auto first = std::find(out.included.begin(), out.included.end(), char{1});
  if (first == out.included.end()) return out;
  const auto last = std::find(out.included.rbegin(), out.included.rend(), char{1});
  const auto lo = static_cast<std::size_t>(first - out.included.begin());
  const auto hi = static_cast<std::size_t>(out.included.rend() - last) - 1;
  out.contiguous = std::all_of(out.included.begin() + static_cast<std::ptrdiff_t>(lo),
                               out.included.begin() + static_cast<std::ptrdiff_t>(hi) + 1,
                               [](char c) { return c == 1; });
  PredictionInterval hull{ExtendedReal::finite(grid[lo]), ExtendedReal::finite(grid[hi])};
  if (lo == 0 && member[0].by_infinity) hull.lower = ExtendedReal::minus_infinity();
  if (hi + 1 == grid.size() && member[hi].by_infinity) hull.upper = ExtendedReal::plus_infinity();
  out.hull = hull;
  return out;
}

LabelGridSet full_cp_set_ridge(const Bag& observed, const LabeledPoint& test_query,
                               const DensityEvaluator& evaluator, std::size_t depth,
                               double alpha, std::span<const double> grid,
                               double regularization, const WeightOptions& options) {
  return full_cp_set_ridge(observed, test_query, dstep_full_cp_weights(evaluator, depth, options),
                           alpha, grid, regularization);
}

AciState aci_start(double target_alpha, double step_size) {
  check_alpha(target_alpha);
  if (!(step_size > 0.0)) throw ParameterError("ACI step size must be positive");
  return AciState{target_alpha, step_size, target_alpha};
}

AciState aci_update(const AciState& state, bool miscovered) {
  const double err = miscovered ? 1.0 : 0.0;
  return AciState{state.alpha_t + state.step_size * (state.target_alpha - err), state.step_size,
                  state.target_alpha};
}

double aci_effective_alpha(const AciState& state) noexcept {
  return std::clamp(state.alpha_t, kAciAlphaFloor, kAciAlphaCeiling);
}

}  // namespace mfcs
