#include "mfcs/agents.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

namespace mfcs {

LabeledPoint Pool::observe(std::size_t i, double standard_normal) const {
  const auto r = static_cast<Eigen::Index>(i);
  return LabeledPoint{candidate(i), true_label[r] + noise_sd[r] * standard_normal, i};
}

Pool Pool::subset(std::span<const std::size_t> indices) const {
  Pool out;
  const auto k = static_cast<Eigen::Index>(indices.size());
  out.features.resize(k, dimension());
  out.true_label.resize(k);
  out.noise_sd.resize(k);
  for (Eigen::Index r = 0; r < k; ++r) {
    const auto src = static_cast<Eigen::Index>(indices[static_cast<std::size_t>(r)]);
    out.features.row(r) = features.row(src);
    out.true_label[r] = true_label[src];
    out.noise_sd[r] = noise_sd[src];
  }
  return out;
}

void Pool::validate() const {
  if (features.rows() == 0) throw ShapeError("Pool: no candidates");
  if (true_label.size() != features.rows() || noise_sd.size() != features.rows()) {
    throw ShapeError("Pool: label and noise vectors must match the candidate count");
  }
  if ((noise_sd.array() < 0.0).any()) throw ParameterError("Pool: negative noise_sd");
  std::set<std::vector<double>> seen;
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    const Vector row = features.row(r);
    if (!seen.emplace(row.data(), row.data() + row.size()).second) {
      throw ParameterError(fmt::format("Pool: candidate {} is a duplicate", r));
    }
  }
}

namespace {

void check_utilities(std::span<const double> u, const char* who) {
  if (u.empty()) throw ShapeError(fmt::format("{}: empty utility vector", who));
  for (double v : u) {
    if (!std::isfinite(v)) throw ParameterError(fmt::format("{}: utilities must be finite", who));
  }
}

std::vector<double> normalized(std::vector<double> v) {
  const double total = compensated_total(v);
  for (double& x : v) x /= total;
  return v;
}

}  // namespace

QueryDistribution softmax_query(std::span<const double> utilities, double lambda) {
  check_utilities(utilities, "softmax_query");
  if (!(lambda >= 0.0)) throw ParameterError("softmax_query: lambda must be >= 0");
  const double top = lambda * *std::max_element(utilities.begin(), utilities.end());
  std::vector<double> e(utilities.size());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = std::exp(lambda * utilities[i] - top);
  return QueryDistribution{normalized(std::move(e)), lambda, std::nullopt, std::nullopt};
}

QueryDistribution bounded_query(std::span<const double> utilities,
                                std::span<const double> cal_utilities, double lambda,
                                double alpha) {
  check_utilities(utilities, "bounded_query");
  if (cal_utilities.empty()) throw ShapeError("bounded_query: empty calibration set");
  check_utilities(cal_utilities, "bounded_query");
  if (!(lambda >= 0.0)) throw ParameterError("bounded_query: lambda must be >= 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("bounded_query: alpha outside (0, 1)");

  // Work relative to the largest exponent so nothing overflows.
  const double shift =
      lambda * std::max(*std::max_element(utilities.begin(), utilities.end()),
                        *std::max_element(cal_utilities.begin(), cal_utilities.end()));
  std::vector<double> pool(utilities.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = std::exp(lambda * utilities[i] - shift);
  std::vector<double> cal(cal_utilities.size());
  for (std::size_t i = 0; i < cal.size(); ++i) cal[i] = std::exp(lambda * cal_utilities[i] - shift);
  std::sort(cal.begin(), cal.end());
  std::vector<double> prefix(cal.size() + 1, 0.0);
  {
    CompensatedSum s;
    for (std::size_t i = 0; i < cal.size(); ++i) {
      s.add(cal[i]);
      prefix[i + 1] = s.value();
    }
  }
  auto ratio = [&](double b) {
    const auto below = static_cast<std::size_t>(std::lower_bound(cal.begin(), cal.end(), b) -
                                                cal.begin());
    const double capped = prefix[below] + b * static_cast<double>(cal.size() - below);
    return b / (capped + b);
  };

  std::vector<double> candidates = pool;
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  // ratio is nondecreasing in b: find the last candidate with ratio < alpha.
  std::size_t lo = 0;
  std::size_t hi = candidates.size();
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (ratio(candidates[mid]) < alpha) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  if (lo == 0) {
    throw BoundInfeasibleError(
        fmt::format("bounded_query: no pool value meets the one-step bound at alpha = {}", alpha),
        std::exp(lambda * *std::min_element(utilities.begin(), utilities.end())));
  }
  const double b = candidates[lo - 1];

  std::vector<double> capped(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) capped[i] = std::min(pool[i], b);
  // Every candidate's one-step test weight must stay below alpha.
  for (double v : capped) {
    if (!(ratio(v) < alpha)) {
      throw NumericalError("bounded_query: bound check failed for a pool candidate");
    }
  }
  QueryDistribution out{normalized(std::move(capped)), lambda, b * std::exp(shift),
                        b / candidates.back()};
  return out;
}

std::size_t sample_query(const QueryDistribution& dist, std::mt19937_64& rng) {
  if (dist.probs.empty()) throw ShapeError("sample_query: empty distribution");
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  double cum = 0.0;
  std::size_t last_positive = dist.probs.size();
  for (std::size_t i = 0; i < dist.probs.size(); ++i) {
    if (dist.probs[i] <= 0.0) continue;
    last_positive = i;
    cum += dist.probs[i];
    if (u < cum) return i;
  }
  if (last_positive == dist.probs.size()) {
    throw NumericalError("sample_query: distribution has no positive mass");
  }
  return last_positive;
}

QueryDistribution propose(std::span<const double> utilities, std::span<const double> cal_utilities,
                          double lambda, std::optional<double> bound_alpha) {
  if (bound_alpha) {
    try {
      return bounded_query(utilities, cal_utilities, lambda, *bound_alpha);
    } catch (const BoundInfeasibleError&) {
    }
  }
  return softmax_query(utilities, lambda);
}

FittedUtility fit_utility(const UtilityModel& model, const Pool& pool, const Bag& fixed,
                          const BagView* extra) {
  FittedUtility out;
  if (model.predictor == PredictorKind::kRidge) {
    if (model.utility != UtilityKind::kPredictedMean) {
      throw ParameterError("ridge predictor only provides the predicted-mean utility");
    }
    RidgeAccumulator acc(pool.dimension());
    acc.add(fixed);
    if (extra != nullptr) acc.add(*extra);
    auto fitted = std::make_shared<const RidgeModel>(acc.solve(model.ridge_regularization));
    out.pool_mean = fitted->predict_rows(pool.features);
    out.pool_utility = out.pool_mean;
    out.predict = [fitted](const Vector& x) { return fitted->predict(x); };
    return out;
  }
  GpAccumulator acc(pool.dimension(), model.kernel);
  acc.add(fixed);
  if (extra != nullptr) acc.add(*extra);
  auto fitted = std::make_shared<const GaussianProcessModel>(acc.model());
  Vector variance;
  fitted->predict_rows(pool.features, &out.pool_mean,
                       model.utility == UtilityKind::kPosteriorVariance ? &variance : nullptr);
  out.pool_utility = model.utility == UtilityKind::kPosteriorVariance ? variance : out.pool_mean;
  out.predict = [fitted](const Vector& x) { return fitted->predict_mean(x); };
  return out;
}

void HistoricalQueryEvaluator::record(std::size_t calibration_size,
                                      std::shared_ptr<const std::vector<double>> probs) {
  by_size_[calibration_size] = std::move(probs);
}

double HistoricalQueryEvaluator::density(const LabeledPoint& query,
                                         const BagView& conditioning) const {
  const auto it = by_size_.find(conditioning.size());
  if (it == by_size_.end()) {
    throw ParameterError(fmt::format(
        "HistoricalQueryEvaluator: no proposal recorded for a conditioning bag of size {}",
        conditioning.size()));
  }
  if (query.source >= it->second->size()) {
    throw ParameterError("HistoricalQueryEvaluator: query point has no pool index");
  }
  return (*it->second)[query.source];
}

std::size_t HistoricalQueryEvaluator::available_depth(std::size_t universe_size) const {
  std::size_t depth = 0;
  while (depth < universe_size && by_size_.count(universe_size - depth - 1) != 0) ++depth;
  return depth;
}

RefitQueryEvaluator::RefitQueryEvaluator(const Pool& pool, Bag fixed, UtilityModel model,
                                         double lambda, std::optional<double> bound_alpha)
    : pool_(pool),
      fixed_(std::move(fixed)),
      model_(model),
      lambda_(lambda),
      bound_alpha_(bound_alpha) {}

double RefitQueryEvaluator::density(const LabeledPoint& query, const BagView& conditioning) const {
  if (query.source >= pool_.size()) {
    throw ParameterError("RefitQueryEvaluator: query point has no pool index");
  }
  const FittedUtility fit = fit_utility(model_, pool_, fixed_, &conditioning);
  const std::span<const double> u(fit.pool_utility.data(),
                                  static_cast<std::size_t>(fit.pool_utility.size()));
  std::vector<double> cal_u;
  if (bound_alpha_) {
    conditioning.for_each([&](const LabeledPoint& p) {
      if (p.source >= pool_.size()) {
        throw ParameterError("RefitQueryEvaluator: conditioning point has no pool index");
      }
      cal_u.push_back(u[p.source]);
    });
  }
  return propose(u, cal_u, lambda_, cal_u.empty() ? std::nullopt : bound_alpha_)
      .probs[query.source];
}

}  // namespace mfcs
