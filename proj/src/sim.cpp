#include "mfcs/sim.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <memory>
#include <numeric>

#include <fmt/format.h>

namespace mfcs {

namespace {

enum class MethodKind { kStandard, kOneStep, kMfcs, kAci };

struct MethodSlot {
  MethodKind kind;
  std::size_t depth;
  std::string label;
};

std::vector<MethodSlot> method_slots(const ExperimentConfig& config) {
  std::vector<MethodSlot> out;
  for (const auto& m : config.methods) {
    if (m == "standard") {
      out.push_back({MethodKind::kStandard, 0, m});
    } else if (m == "one-step") {
      out.push_back({MethodKind::kOneStep, 1, m});
    } else if (m == "mfcs") {
      for (std::size_t d : config.depths) {
        out.push_back({MethodKind::kMfcs, d, fmt::format("mfcs-d{}", d)});
      }
    } else if (m == "aci") {
      out.push_back({MethodKind::kAci, 0, m});
    } else {
      throw ParameterError(fmt::format("methods: unknown method '{}'", m));
    }
  }
  return out;
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since)
      .count();
}

UtilityModel utility_model(const ExperimentConfig& config, UtilityKind utility) {
  UtilityModel m;
  m.predictor = config.predictor;
  m.utility = utility;
  m.ridge_regularization = config.ridge_regularization;
  m.kernel = config.kernel;
  return m;
}

std::optional<double> bound_alpha(const ExperimentConfig& config) {
  return config.bounded ? std::optional<double>(config.alpha) : std::nullopt;
}

std::vector<double> utilities_at(const FittedUtility& fit, const Bag& bag) {
  std::vector<double> out;
  out.reserve(bag.size());
  for (const auto& p : bag) out.push_back(fit.pool_utility[static_cast<Eigen::Index>(p.source)]);
  return out;
}

std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

struct Streams {
  std::mt19937_64 init;
  std::mt19937_64 query;
  std::mt19937_64 noise;
  std::mt19937_64 coin;

  explicit Streams(std::uint64_t seed)
      : init(make_stream(seed, "init")),
        query(make_stream(seed, "query")),
        noise(make_stream(seed, "noise")),
        coin(make_stream(seed, "coin")) {}
};

using MetricFn = std::function<double(const FittedUtility&, std::size_t query)>;

std::vector<StepRecord> run_split_loop(const ExperimentConfig& config, const Pool& pool,
                                       const UtilityModel& model, const MetricFn& metric,
                                       std::uint64_t seed) {
  Streams rng(seed);
  const auto init = biased_iid_init(pool, config.n_train + config.n_cal,
                                    config.gamma_init_bias, rng.init);
  Bag training;
  Bag calibration;
  for (std::size_t k = 0; k < init.size(); ++k) {
    auto p = pool.observe(init[k], standard_normal(rng.noise));
    (k < config.n_train ? training : calibration).add(std::move(p));
  }

  const auto slots = method_slots(config);
  WeightOptions options;
  options.max_operations = config.max_operations;
  HistoricalQueryEvaluator history;
  AciState aci = aci_start(config.alpha, config.aci_step);
  std::size_t queried_cal = 0;
  std::vector<StepRecord> records;
  records.reserve(config.steps * slots.size());

  for (std::size_t t = 1; t <= config.steps; ++t) {
    const FittedUtility fit = fit_utility(model, pool, training);
    const auto cal_u = utilities_at(fit, calibration);
    const QueryDistribution dist =
        propose(as_span(fit.pool_utility), cal_u, config.lambda, bound_alpha(config));
    history.record(calibration.size(),
                   std::make_shared<const std::vector<double>>(dist.probs));

    const std::size_t q = sample_query(dist, rng.query);
    const LabeledPoint test = pool.observe(q, standard_normal(rng.noise));
    const LabeledPoint query{test.x, 0.0, q};
    const double metric_value = metric(fit, q);
    const SplitCalibrationState state = make_split_state(training, calibration, fit.predict);
    const double prediction = state.predict(test.x);

    std::unique_ptr<RefitQueryEvaluator> refit;
    std::size_t max_depth = history.available_depth(calibration.size() + 1);
    if (config.split_conditioning == SplitConditioning::kRefit) {
      refit = std::make_unique<RefitQueryEvaluator>(pool, training, model, config.lambda,
                                                    bound_alpha(config));
      max_depth = queried_cal + 1;
    }
    const DensityEvaluator& evaluator =
        refit ? static_cast<const DensityEvaluator&>(*refit) : history;

    for (const auto& slot : slots) {
      const auto start = std::chrono::steady_clock::now();
      StepRecord rec;
      rec.seed = seed;
      rec.t = t;
      rec.method = slot.label;
      switch (slot.kind) {
        case MethodKind::kStandard:
          rec.interval = standard_split_interval(state, test.x, config.alpha);
          break;
        case MethodKind::kAci:
          rec.interval = standard_split_interval(state, test.x, aci_effective_alpha(aci));
          break;
        case MethodKind::kOneStep:
        case MethodKind::kMfcs:
          rec.depth_used = std::min(slot.depth, max_depth);
          rec.interval =
              mfcs_split_interval(state, query, evaluator, rec.depth_used, config.alpha, options);
          break;
      }
      rec.covered = rec.interval.contains(test.y);
      if (slot.kind == MethodKind::kAci) aci = aci_update(aci, !rec.covered);
      rec.width = rec.interval.width();
      rec.metric = metric_value;
      rec.bound_relative = dist.bound_relative;
      rec.label = test.y;
      rec.prediction = prediction;
      if (config.wall_time) rec.wall_ms = elapsed_ms(start);
      records.push_back(std::move(rec));
    }

    if (uniform01(rng.coin) < config.cal_assignment_prob) {
      calibration.add(test);
      ++queried_cal;
    } else {
      training.add(test);
    }
  }
  return records;
}

double sample_sd(const Vector& v) {
  if (v.size() < 2) return 0.0;
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
}

std::vector<StepRecord> run_full_design(const ExperimentConfig& config, const Pool& pool,
                                        std::uint64_t seed) {
  Streams rng(seed);
  const auto init = biased_iid_init(pool, config.n_train, config.gamma_init_bias, rng.init);
  Bag observed;
  for (std::size_t i : init) observed.add(pool.observe(i, standard_normal(rng.noise)));

  const UtilityModel model = utility_model(config, UtilityKind::kPredictedMean);
  const auto slots = method_slots(config);
  WeightOptions options;
  options.max_operations = config.max_operations;
  const RefitQueryEvaluator evaluator(pool, Bag{}, model, config.lambda, bound_alpha(config));
  AciState aci = aci_start(config.alpha, config.aci_step);
  std::vector<StepRecord> records;

  for (std::size_t t = 1; t <= config.steps; ++t) {
    const FittedUtility fit = fit_utility(model, pool, observed);
    const auto obs_u = utilities_at(fit, observed);
    const QueryDistribution dist =
        propose(as_span(fit.pool_utility), obs_u, config.lambda, bound_alpha(config));
    const std::size_t q = sample_query(dist, rng.query);
    const LabeledPoint test = pool.observe(q, standard_normal(rng.noise));
    const LabeledPoint query{test.x, 0.0, q};
    const double prediction = fit.predict(test.x);

    Vector labels(static_cast<Eigen::Index>(observed.size()));
    for (std::size_t i = 0; i < observed.size(); ++i) {
      labels[static_cast<Eigen::Index>(i)] = observed[i].y;
    }
    const auto grid = make_label_grid(pool.true_label.minCoeff(), pool.true_label.maxCoeff(),
                                      sample_sd(labels), config.grid_size);

    for (const auto& slot : slots) {
      const auto start = std::chrono::steady_clock::now();
      StepRecord rec;
      rec.seed = seed;
      rec.t = t;
      rec.method = slot.label;
      double alpha = config.alpha;
      FullCpWeights weights;
      if (slot.kind == MethodKind::kStandard || slot.kind == MethodKind::kAci) {
        if (slot.kind == MethodKind::kAci) alpha = aci_effective_alpha(aci);
        weights = [](std::span<const LabeledPoint> pts) { return WeightVector::uniform(pts.size()); };
      } else {
        rec.depth_used = std::min(slot.depth, t);
        const std::size_t depth = rec.depth_used;
        if (config.conditioning_labels == ConditioningLabels::kTrue) {
          weights = [&, depth](std::span<const LabeledPoint> pts) {
            std::vector<LabeledPoint> clean(pts.begin(), pts.end());
            for (std::size_t i = 0; i + 1 < clean.size(); ++i) {
              clean[i].y = pool.true_label[static_cast<Eigen::Index>(clean[i].source)];
            }
            return mfcs_dstep_weights(clean, evaluator, depth, options);
          };
        } else {
          weights = dstep_full_cp_weights(evaluator, depth, options);
        }
      }
      const LabelGridSet set =
          full_cp_set_ridge(observed, query, weights, alpha, grid, config.ridge_regularization);
      rec.covered = full_cp_admits_ridge(observed, query, test.y, weights, alpha,
                                         config.ridge_regularization);
      if (slot.kind == MethodKind::kAci) aci = aci_update(aci, !rec.covered);
      if (set.hull) {
        rec.interval = *set.hull;
      } else {
        rec.interval = {ExtendedReal::finite(prediction), ExtendedReal::finite(prediction)};
      }
      rec.width = set.hull ? set.hull->width() : ExtendedReal::finite(0.0);
      rec.contiguous = set.contiguous;
      rec.metric = prediction;
      rec.bound_relative = dist.bound_relative;
      rec.label = test.y;
      rec.prediction = prediction;
      if (config.wall_time) rec.wall_ms = elapsed_ms(start);
      records.push_back(std::move(rec));
    }
    observed.add(test);
  }
  return records;
}

}  // namespace

std::vector<std::string> ExperimentConfig::method_labels() const {
  std::vector<std::string> out;
  for (const auto& s : method_slots(*this)) out.push_back(s.label);
  return out;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ParameterError(msg); };
  if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha: must lie in (0, 1)");
  if (steps < 1) fail("T: must be at least 1");
  if (n_train < 1) fail("n_train: must be at least 1");
  if (cp == CpVariant::kSplit && n_cal < 1) fail("n_cal: must be at least 1");
  if (!(lambda >= 0.0)) fail("lambda: must be >= 0");
  if (!(aci_step > 0.0)) fail("aci_step: must be positive");
  if (!(cal_assignment_prob >= 0.0 && cal_assignment_prob <= 1.0)) {
    fail("cal_assignment_prob: must lie in [0, 1]");
  }
  if (methods.empty()) fail("methods: at least one method is required");
  method_slots(*this);
  if (std::find(methods.begin(), methods.end(), "mfcs") != methods.end()) {
    if (depths.empty()) fail("depths: required when the mfcs method is enabled");
    for (std::size_t d : depths) {
      if (d < 1 || d > steps) fail(fmt::format("depths: {} outside [1, T = {}]", d, steps));
    }
  }
  if (seed_end < seed_begin) fail("seeds: end precedes start");
  if (!(ridge_regularization > 0.0)) fail("ridge_regularization: must be positive");
  if (!(kernel.noise_variance > 0.0)) fail("gp_noise_variance: must be positive");
  if (grid_size < 2) fail("grid_size: must be at least 2");
  if (mode == ExperimentMode::kActiveLearning) {
    if (predictor != PredictorKind::kGp) fail("predictor: active learning requires gp");
    if (cp != CpVariant::kSplit) fail("cp: active learning runs split CP only");
    if (regression_pool.size < holdout + n_train + n_cal + 1) {
      fail("holdout: pool too small for holdout plus initial data");
    }
  } else {
    if (cp == CpVariant::kFull && predictor != PredictorKind::kRidge) {
      fail("predictor: full CP requires ridge");
    }
    if (split_conditioning == SplitConditioning::kRefit) {
      fail("split_conditioning: refit needs a label-free utility (active learning only)");
    }
    const std::size_t size = std::size_t{1} << std::min<std::size_t>(design_pool.length, 20);
    const std::size_t needed = cp == CpVariant::kFull ? n_train : n_train + n_cal;
    if (needed > size) fail("n_train: more initial points than pool candidates");
  }
}

Pool make_experiment_pool(const ExperimentConfig& config) {
  return config.mode == ExperimentMode::kDesign ? make_combinatorial_pool(config.design_pool)
                                                : make_regression_pool(config.regression_pool);
}

std::vector<StepRecord> run_design_experiment(const ExperimentConfig& config, const Pool& pool,
                                              std::uint64_t seed) {
  if (config.cp == CpVariant::kFull) return run_full_design(config, pool, seed);
  const UtilityModel model = utility_model(config, UtilityKind::kPredictedMean);
  return run_split_loop(
      config, pool, model,
      [](const FittedUtility& fit, std::size_t q) {
        return fit.pool_mean[static_cast<Eigen::Index>(q)];
      },
      seed);
}

std::vector<StepRecord> run_active_learning_experiment(const ExperimentConfig& config,
                                                       const Pool& pool, std::uint64_t seed) {
  if (config.holdout >= pool.size()) throw ParameterError("holdout: larger than the pool");
  auto rng = make_stream(seed, "holdout");
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  // Partial Fisher-Yates: the first `holdout` entries are the test set.
  for (std::size_t i = 0; i < config.holdout; ++i) {
    const auto span = static_cast<double>(order.size() - i);
    const auto j = i + std::min(order.size() - i - 1, static_cast<std::size_t>(uniform01(rng) * span));
    std::swap(order[i], order[j]);
  }
  std::vector<std::size_t> held(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(config.holdout));
  std::vector<std::size_t> rest(order.begin() + static_cast<std::ptrdiff_t>(config.holdout), order.end());
  std::sort(held.begin(), held.end());
  std::sort(rest.begin(), rest.end());
  const Pool query_pool = pool.subset(rest);
  const Pool holdout_pool = pool.subset(held);
  Vector holdout_y(holdout_pool.true_label.size());
  for (Eigen::Index i = 0; i < holdout_y.size(); ++i) {
    holdout_y[i] = holdout_pool.observe(static_cast<std::size_t>(i), standard_normal(rng)).y;
  }

  const UtilityModel model = utility_model(config, UtilityKind::kPosteriorVariance);
  return run_split_loop(
      config, query_pool, model,
      [&](const FittedUtility& fit, std::size_t) {
        double sse = 0.0;
        for (Eigen::Index i = 0; i < holdout_y.size(); ++i) {
          const double r = holdout_y[i] - fit.predict(holdout_pool.candidate(static_cast<std::size_t>(i)));
          sse += r * r;
        }
        return sse / static_cast<double>(holdout_y.size());
      },
      seed);
}

std::vector<StepRecord> run_experiment(const ExperimentConfig& config, const Pool& pool,
                                       std::uint64_t seed) {
  return config.mode == ExperimentMode::kDesign
             ? run_design_experiment(config, pool, seed)
             : run_active_learning_experiment(config, pool, seed);
}

}  // namespace mfcs
