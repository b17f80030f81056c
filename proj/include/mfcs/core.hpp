#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mfcs/errors.hpp"

namespace mfcs {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr std::size_t kNoSource = std::numeric_limits<std::size_t>::max();

/// A feature vector with its scalar label.
///
/// `source` optionally records the candidate index the point was drawn from
/// when it comes from a finite pool; evaluators use it to skip a feature
/// lookup. It takes no part in equality.
struct LabeledPoint {
  Vector x;
  double y = 0.0;
  std::size_t source = kNoSource;
};

bool same_point(const LabeledPoint& a, const LabeledPoint& b);

/// Unordered multiset of labeled points. Insertion order is kept for
/// iteration, but equality and fingerprints ignore it.
class Bag {
 public:
  Bag() = default;
  explicit Bag(std::vector<LabeledPoint> points);

  void add(LabeledPoint p);

  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  // Feature dimension shared by all points; 0 for an empty bag.
  Eigen::Index dimension() const noexcept;

  const LabeledPoint& operator[](std::size_t i) const { return points_[i]; }
  std::span<const LabeledPoint> points() const noexcept { return points_; }
  auto begin() const noexcept { return points_.begin(); }
  auto end() const noexcept { return points_.end(); }

  // Order-independent hash over feature and label bit patterns.
  std::uint64_t fingerprint() const;

  friend bool operator==(const Bag& a, const Bag& b);

 private:
  std::vector<LabeledPoint> points_;
};

/// Real number or a signed infinity, kept as an explicit tag rather than a
/// large float so it survives formatting and comparisons losslessly.
class ExtendedReal {
 public:
  enum class Kind : std::uint8_t { kFinite, kPlusInfinity, kMinusInfinity };

  constexpr ExtendedReal() = default;
  // Throws ParameterError for NaN or a non-finite value.
  static ExtendedReal finite(double v);
  static constexpr ExtendedReal plus_infinity() { return ExtendedReal(Kind::kPlusInfinity); }
  static constexpr ExtendedReal minus_infinity() { return ExtendedReal(Kind::kMinusInfinity); }

  Kind kind() const noexcept { return kind_; }
  bool is_finite() const noexcept { return kind_ == Kind::kFinite; }
  bool is_plus_infinity() const noexcept { return kind_ == Kind::kPlusInfinity; }
  bool is_minus_infinity() const noexcept { return kind_ == Kind::kMinusInfinity; }
  // Finite value; throws NumericalError for an infinite sentinel.
  double value() const;
  // IEEE view (+-inf for the sentinels).
  double as_double() const noexcept;

  // "inf", "-inf", or the shortest round-trip decimal.
  std::string to_string() const;

  friend bool operator==(const ExtendedReal& a, const ExtendedReal& b) noexcept;
  friend bool operator<(const ExtendedReal& a, const ExtendedReal& b) noexcept;
  friend bool operator<=(const ExtendedReal& a, const ExtendedReal& b) noexcept {
    return a == b || a < b;
  }

 private:
  constexpr explicit ExtendedReal(Kind k, double v = 0.0) : kind_(k), value_(v) {}
  Kind kind_ = Kind::kFinite;
  double value_ = 0.0;
};

/// Neumaier compensated accumulator.
class CompensatedSum {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::fabs(sum_) >= std::fabs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double v) noexcept {
    add(v);
    return *this;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double compensated_total(std::span<const double> values) noexcept;

struct ScoreWeight {
  double score = 0.0;
  double weight = 0.0;
};

/// Scores with probability weights plus a point mass at +infinity.
///
/// Invariant: weights >= 0, scores finite, and
/// sum(weights) + infinity_mass == 1 within 1e-12.
class WeightedScoreDistribution {
 public:
  static constexpr double kNormalizationTolerance = 1e-12;

  WeightedScoreDistribution(std::vector<ScoreWeight> entries, double infinity_mass);

  // Pairs `scores[i]` with `weights[i]`; the trailing weight (there must be
  // exactly scores.size() + 1 weights) becomes the mass at infinity.
  static WeightedScoreDistribution from_scores(std::span<const double> scores,
                                               std::span<const double> weights);

  std::span<const ScoreWeight> entries() const noexcept { return entries_; }
  double infinity_mass() const noexcept { return infinity_mass_; }

 private:
  std::vector<ScoreWeight> entries_;
  double infinity_mass_;
};

/// Smallest score whose cumulative weight reaches `beta` (up to the
/// normalization tolerance), with equal scores
/// merged first. Returns +infinity when the finite entries never reach it.
ExtendedReal weighted_quantile(const WeightedScoreDistribution& dist, double beta);

/// Closed interval, possibly unbounded on either side.
struct PredictionInterval {
  ExtendedReal lower;
  ExtendedReal upper;

  bool is_informative() const noexcept { return lower.is_finite() && upper.is_finite(); }
  ExtendedReal width() const;
  bool contains(double y) const noexcept;
};

/// [mu_hat - q, mu_hat + q]; an infinite q gives the whole real line.
PredictionInterval interval_from_residual_quantile(double mu_hat, ExtendedReal q);

}  // namespace mfcs
