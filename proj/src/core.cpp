#include "mfcs/core.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <fmt/format.h>

namespace mfcs {

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t point_hash(const LabeledPoint& p) {
  std::uint64_t h = mix64(static_cast<std::uint64_t>(p.x.size()));
  for (Eigen::Index k = 0; k < p.x.size(); ++k) {
    h = mix64(h ^ std::bit_cast<std::uint64_t>(p.x[k] + 0.0));
  }
  return mix64(h ^ std::bit_cast<std::uint64_t>(p.y + 0.0));
}

bool point_less(const LabeledPoint& a, const LabeledPoint& b) {
  if (a.x.size() != b.x.size()) return a.x.size() < b.x.size();
  for (Eigen::Index k = 0; k < a.x.size(); ++k) {
    if (a.x[k] != b.x[k]) return a.x[k] < b.x[k];
  }
  return a.y < b.y;
}

}  // namespace

bool same_point(const LabeledPoint& a, const LabeledPoint& b) {
  return a.x.size() == b.x.size() && a.x == b.x && a.y == b.y;
}

Bag::Bag(std::vector<LabeledPoint> points) {
  points_.reserve(points.size());
  for (auto& p : points) add(std::move(p));
}

void Bag::add(LabeledPoint p) {
  if (!std::isfinite(p.y)) {
    throw ParameterError("Bag::add: label must be finite");
  }
  if (!points_.empty() && p.x.size() != points_.front().x.size()) {
    throw ShapeError(fmt::format("Bag::add: feature dimension {} does not match bag dimension {}",
                                 p.x.size(), points_.front().x.size()));
  }
  points_.push_back(std::move(p));
}

Eigen::Index Bag::dimension() const noexcept {
  return points_.empty() ? 0 : points_.front().x.size();
}

std::uint64_t Bag::fingerprint() const {
  // Sum of mixed per-point hashes is commutative, so insertion order is
  // irrelevant; the final mix folds in the cardinality.
  std::uint64_t acc = 0;
  for (const auto& p : points_) acc += point_hash(p);
  return mix64(acc ^ mix64(points_.size()));
}

bool operator==(const Bag& a, const Bag& b) {
  if (a.size() != b.size()) return false;
  auto lhs = a.points_;
  auto rhs = b.points_;
  std::sort(lhs.begin(), lhs.end(), point_less);
  std::sort(rhs.begin(), rhs.end(), point_less);
  return std::equal(lhs.begin(), lhs.end(), rhs.begin(), same_point);
}

ExtendedReal ExtendedReal::finite(double v) {
  if (!std::isfinite(v)) {
    throw ParameterError("ExtendedReal::finite: value is not finite");
  }
  return ExtendedReal(Kind::kFinite, v);
}

double ExtendedReal::value() const {
  if (!is_finite()) throw NumericalError("ExtendedReal::value: value is infinite");
  return value_;
}

double ExtendedReal::as_double() const noexcept {
  switch (kind_) {
    case Kind::kPlusInfinity:
      return std::numeric_limits<double>::infinity();
    case Kind::kMinusInfinity:
      return -std::numeric_limits<double>::infinity();
    default:
      return value_;
  }
}

std::string ExtendedReal::to_string() const {
  if (is_plus_infinity()) return "inf";
  if (is_minus_infinity()) return "-inf";
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value_);
  return std::string(buf.data(), end);
}

bool operator==(const ExtendedReal& a, const ExtendedReal& b) noexcept {
  if (a.kind_ != b.kind_) return false;
  return !a.is_finite() || a.value_ == b.value_;
}

bool operator<(const ExtendedReal& a, const ExtendedReal& b) noexcept {
  return a.as_double() < b.as_double();
}

double compensated_total(std::span<const double> values) noexcept {
  CompensatedSum s;
  for (double v : values) s.add(v);
  return s.value();
}

WeightedScoreDistribution::WeightedScoreDistribution(std::vector<ScoreWeight> entries,
                                                     double infinity_mass)
    : entries_(std::move(entries)), infinity_mass_(infinity_mass) {
  if (!(infinity_mass_ >= 0.0 && infinity_mass_ <= 1.0)) {
    throw ParameterError("WeightedScoreDistribution: infinity mass outside [0, 1]");
  }
  CompensatedSum total;
  for (const auto& e : entries_) {
    if (!std::isfinite(e.score)) {
      throw ParameterError("WeightedScoreDistribution: scores must be finite");
    }
    if (!(e.weight >= 0.0)) {
      throw ParameterError("WeightedScoreDistribution: weights must be nonnegative");
    }
    total.add(e.weight);
  }
  total.add(infinity_mass_);
  if (std::fabs(total.value() - 1.0) > kNormalizationTolerance) {
    throw ParameterError(
        fmt::format("WeightedScoreDistribution: total mass {:.17g} is not 1", total.value()));
  }
}

WeightedScoreDistribution WeightedScoreDistribution::from_scores(std::span<const double> scores,
                                                                 std::span<const double> weights) {
  if (weights.size() != scores.size() + 1) {
    throw ShapeError(fmt::format(
        "WeightedScoreDistribution::from_scores: expected {} weights (scores + test), got {}",
        scores.size() + 1, weights.size()));
  }
  std::vector<ScoreWeight> entries(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) entries[i] = {scores[i], weights[i]};
  return WeightedScoreDistribution(std::move(entries), weights.back());
}

ExtendedReal weighted_quantile(const WeightedScoreDistribution& dist, double beta) {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw ParameterError(fmt::format("weighted_quantile: beta {} outside (0, 1)", beta));
  }
  std::vector<ScoreWeight> sorted(dist.entries().begin(), dist.entries().end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoreWeight& a, const ScoreWeight& b) { return a.score < b.score; });

  CompensatedSum cumulative;
  std::size_t i = 0;
  while (i < sorted.size()) {
    const double score = sorted[i].score;
    // Tied scores contribute their merged weight at once.
    while (i < sorted.size() && sorted[i].score == score) {
      cumulative.add(sorted[i].weight);
      ++i;
    }
    // Slack for rounding: k equal weights of 1/m must reach k/m exactly.
    if (cumulative.value() >= beta - WeightedScoreDistribution::kNormalizationTolerance) {
      return ExtendedReal::finite(score);
    }
  }
  return ExtendedReal::plus_infinity();
}

ExtendedReal PredictionInterval::width() const {
  if (!is_informative()) return ExtendedReal::plus_infinity();
  return ExtendedReal::finite(upper.value() - lower.value());
}

bool PredictionInterval::contains(double y) const noexcept {
  return lower.as_double() <= y && y <= upper.as_double();
}

PredictionInterval interval_from_residual_quantile(double mu_hat, ExtendedReal q) {
  if (q.is_minus_infinity() || (q.is_finite() && q.value() < 0.0)) {
    throw ParameterError("interval_from_residual_quantile: quantile must be nonnegative");
  }
  if (q.is_plus_infinity()) {
    return {ExtendedReal::minus_infinity(), ExtendedReal::plus_infinity()};
  }
  return {ExtendedReal::finite(mu_hat - q.value()), ExtendedReal::finite(mu_hat + q.value())};
}

}  // namespace mfcs
