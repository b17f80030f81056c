#pragma once

#include <cstddef>
#include <vector>

#include "mfcs/core.hpp"
#include "mfcs/weights.hpp"

namespace mfcs {

inline constexpr double kDefaultRidgeRegularization = 0.01;

/// Linear ridge regression without an intercept term; add a constant feature
/// if one is wanted.
struct RidgeModel {
  Vector coefficients;
  double regularization = kDefaultRidgeRegularization;
  std::size_t fitted_size = 0;

  double predict(const Vector& x) const;
  Vector predict_rows(const Matrix& rows) const;
};

/// Running X'X and X'y for ridge fits built from several sources.
class RidgeAccumulator {
 public:
  explicit RidgeAccumulator(Eigen::Index dimension);

  void add(const LabeledPoint& p);
  void add(const Bag& data);
  void add(const BagView& data);
  std::size_t count() const noexcept { return count_; }
  Eigen::Index dimension() const noexcept { return rhs_.size(); }

  RidgeModel solve(double regularization = kDefaultRidgeRegularization) const;

 private:
  Matrix gram_;  // lower triangle only
  Vector rhs_;
  std::size_t count_ = 0;
};

/// argmin_w sum (y_i - w.x_i)^2 + regularization * |w|^2.
/// Throws ParameterError for an empty bag or nonpositive regularization and
/// ShapeError for mixed feature dimensions.
RidgeModel ridge_fit(const Bag& data, double regularization = kDefaultRidgeRegularization);
RidgeModel ridge_fit(const BagView& data, double regularization = kDefaultRidgeRegularization);

/// Residuals of a ridge fit on `training` plus a candidate (x*, y), written as
/// affine functions of the candidate label: residual_i(y) = a_i + b_i * y.
/// Index training.size() is the candidate itself.
struct ResidualAffine {
  std::vector<double> intercept;
  std::vector<double> slope;

  std::size_t size() const noexcept { return intercept.size(); }
  double residual(std::size_t i, double y) const { return intercept[i] + slope[i] * y; }
  double score(std::size_t i, double y) const { return std::fabs(residual(i, y)); }
};

/// Closed form of the full-conformal ridge refit: one solve covers every
/// imputed label. Requires regularization > 0.
ResidualAffine ridge_residual_affine(const Bag& training, const Vector& x_star,
                                     double regularization = kDefaultRidgeRegularization);

/// Dot-product kernel plus white noise:
///   k(x, x') = sigma0^2 + x.x' + noise_variance * [x == x'].
/// The defaults correspond to DotProduct(sigma_0=0.05) + WhiteKernel(0.05).
struct GpKernel {
  double sigma0 = 0.05;
  double noise_variance = 0.05;
};

struct GpPrediction {
  double mean = 0.0;
  // Posterior variance of the latent function (observation noise excluded).
  double variance = 0.0;
};

class GaussianProcessModel;

/// Running Phi'Phi and Phi'y over the features [sigma0, x], scaled by the
/// noise variance.
class GpAccumulator {
 public:
  GpAccumulator(Eigen::Index dimension, const GpKernel& kernel = {});

  void add(const LabeledPoint& p);
  void add(const Bag& data);
  void add(const BagView& data);
  std::size_t count() const noexcept { return count_; }

  GaussianProcessModel model() const;

 private:
  friend class GaussianProcessModel;
  GpKernel kernel_;
  Matrix precision_;  // lower triangle only, identity not yet added
  Vector rhs_;
  Vector phi_;
  std::size_t count_ = 0;
};

/// Zero-mean Gaussian-process regressor with fixed hyperparameters.
///
/// The dot-product kernel has finite rank, so the posterior is carried in
/// weight space over the features [sigma0, x]: precision
/// A = I + Phi' Phi / noise, mean weights A^-1 Phi' y / noise. This is the
/// same posterior as the kernel-matrix form at O(p^3) cost instead of O(n^3).
class GaussianProcessModel {
 public:
  static GaussianProcessModel fit(const Bag& data, const GpKernel& kernel = {},
                                  Eigen::Index dimension = -1);
  static GaussianProcessModel fit(const BagView& data, const GpKernel& kernel = {},
                                  Eigen::Index dimension = -1);

  GpPrediction predict(const Vector& x) const;
  double predict_mean(const Vector& x) const { return predict(x).mean; }
  // Row-wise predictions for a matrix of feature rows; either output may be null.
  void predict_rows(const Matrix& rows, Vector* mean, Vector* variance) const;

  const GpKernel& kernel() const noexcept { return kernel_; }
  std::size_t fitted_size() const noexcept { return fitted_size_; }

 private:
  friend class GpAccumulator;
  GaussianProcessModel() = default;

  GpKernel kernel_;
  std::size_t fitted_size_ = 0;
  Vector mean_weights_;
  Eigen::LLT<Matrix> precision_;
};

/// Posterior mean and latent variance at `query` for a GP fit on `data`.
/// With no data this is the prior: mean 0, variance sigma0^2 + x.x.
GpPrediction gp_fit_predict(const Bag& data, const Vector& query, const GpKernel& kernel = {});

}  // namespace mfcs
