#include "mfcs/predictors.hpp"

#include <fmt/format.h>

namespace mfcs {

namespace {

void check_dimension(const char* who, Eigen::Index got, Eigen::Index want) {
  if (got != want) throw ShapeError(fmt::format("{}: feature dimension {} != {}", who, got, want));
}

Eigen::Index first_dimension(const BagView& view) {
  Eigen::Index dim = -1;
  view.for_each([&](const LabeledPoint& p) {
    if (dim < 0) dim = p.x.size();
  });
  return dim;
}

Matrix symmetric_from_lower(const Matrix& lower) {
  Matrix full = lower;
  full.triangularView<Eigen::StrictlyUpper>() = lower.transpose();
  return full;
}

}  // namespace

double RidgeModel::predict(const Vector& x) const {
  check_dimension("RidgeModel::predict", x.size(), coefficients.size());
  return coefficients.dot(x);
}

Vector RidgeModel::predict_rows(const Matrix& rows) const {
  check_dimension("RidgeModel::predict_rows", rows.cols(), coefficients.size());
  return rows * coefficients;
}

RidgeAccumulator::RidgeAccumulator(Eigen::Index dimension)
    : gram_(Matrix::Zero(dimension, dimension)), rhs_(Vector::Zero(dimension)) {}

void RidgeAccumulator::add(const LabeledPoint& p) {
  check_dimension("ridge_fit", p.x.size(), rhs_.size());
  gram_.selfadjointView<Eigen::Lower>().rankUpdate(p.x);
  rhs_.noalias() += p.y * p.x;
  ++count_;
}

void RidgeAccumulator::add(const Bag& data) {
  for (const auto& p : data) add(p);
}

void RidgeAccumulator::add(const BagView& data) {
  data.for_each([&](const LabeledPoint& p) { add(p); });
}

RidgeModel RidgeAccumulator::solve(double regularization) const {
  if (count_ == 0) throw ParameterError("ridge_fit: empty training bag");
  if (!(regularization > 0.0)) throw ParameterError("ridge_fit: regularization must be positive");
  Matrix a = symmetric_from_lower(gram_);
  a.diagonal().array() += regularization;
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("ridge_fit: regularized normal equations are not positive definite");
  }
  return RidgeModel{llt.solve(rhs_), regularization, count_};
}

RidgeModel ridge_fit(const Bag& data, double regularization) {
  if (data.empty()) throw ParameterError("ridge_fit: empty training bag");
  RidgeAccumulator acc(data.dimension());
  acc.add(data);
  return acc.solve(regularization);
}

RidgeModel ridge_fit(const BagView& data, double regularization) {
  if (data.empty()) throw ParameterError("ridge_fit: empty training bag");
  RidgeAccumulator acc(first_dimension(data));
  acc.add(data);
  return acc.solve(regularization);
}

ResidualAffine ridge_residual_affine(const Bag& training, const Vector& x_star,
                                     double regularization) {
  if (!(regularization > 0.0)) {
    throw NumericalError(
        "ridge_residual_affine: the augmented system needs positive regularization");
  }
  const Eigen::Index dim = x_star.size();
  Matrix gram = Matrix::Zero(dim, dim);
  Vector rhs = Vector::Zero(dim);
  for (const auto& p : training) {
    check_dimension("ridge_residual_affine", p.x.size(), dim);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(p.x);
    rhs.noalias() += p.y * p.x;
  }
  gram.selfadjointView<Eigen::Lower>().rankUpdate(x_star);
  Matrix a = symmetric_from_lower(gram);
  a.diagonal().array() += regularization;
  const Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("ridge_residual_affine: augmented system is not positive definite");
  }
  // Refit coefficients on the augmented bag are w0 + y * g.
  const Vector w0 = llt.solve(rhs);
  const Vector g = llt.solve(x_star);

  ResidualAffine out;
  out.intercept.reserve(training.size() + 1);
  out.slope.reserve(training.size() + 1);
  for (const auto& p : training) {
    out.intercept.push_back(p.y - p.x.dot(w0));
    out.slope.push_back(-p.x.dot(g));
  }
  out.intercept.push_back(-x_star.dot(w0));
  out.slope.push_back(1.0 - x_star.dot(g));
  return out;
}

GpAccumulator::GpAccumulator(Eigen::Index dimension, const GpKernel& kernel)
    : kernel_(kernel),
      precision_(Matrix::Zero(dimension + 1, dimension + 1)),
      rhs_(Vector::Zero(dimension + 1)),
      phi_(dimension + 1) {
  if (!(kernel.noise_variance > 0.0) || kernel.sigma0 < 0.0) {
    throw ParameterError("GaussianProcessModel: noise variance must be positive");
  }
}

void GpAccumulator::add(const LabeledPoint& p) {
  check_dimension("GaussianProcessModel", p.x.size(), rhs_.size() - 1);
  phi_[0] = kernel_.sigma0;
  phi_.tail(p.x.size()) = p.x;
  precision_.selfadjointView<Eigen::Lower>().rankUpdate(phi_, 1.0 / kernel_.noise_variance);
  rhs_.noalias() += (p.y / kernel_.noise_variance) * phi_;
  ++count_;
}

void GpAccumulator::add(const Bag& data) {
  for (const auto& p : data) add(p);
}

void GpAccumulator::add(const BagView& data) {
  data.for_each([&](const LabeledPoint& p) { add(p); });
}

GaussianProcessModel GpAccumulator::model() const {
  Matrix a = symmetric_from_lower(precision_);
  a.diagonal().array() += 1.0;

  GaussianProcessModel m;
  m.kernel_ = kernel_;
  m.fitted_size_ = count_;
  m.precision_.compute(a);
  if (m.precision_.info() != Eigen::Success) {
    a.diagonal().array() += 1e-10;
    m.precision_.compute(a);
    if (m.precision_.info() != Eigen::Success) {
      const Eigen::SelfAdjointEigenSolver<Matrix> eig(a, Eigen::EigenvaluesOnly);
      throw NumericalError(fmt::format(
          "GaussianProcessModel: Cholesky failed after jitter (eigenvalues in [{:.3g}, {:.3g}])",
          eig.eigenvalues().minCoeff(), eig.eigenvalues().maxCoeff()));
    }
  }
  m.mean_weights_ = m.precision_.solve(rhs_);
  return m;
}

GaussianProcessModel GaussianProcessModel::fit(const Bag& data, const GpKernel& kernel,
                                               Eigen::Index dimension) {
  if (dimension < 0) dimension = data.dimension();
  GpAccumulator acc(dimension, kernel);
  acc.add(data);
  return acc.model();
}

GaussianProcessModel GaussianProcessModel::fit(const BagView& data, const GpKernel& kernel,
                                               Eigen::Index dimension) {
  if (dimension < 0) {
    dimension = first_dimension(data);
    if (dimension < 0) throw ShapeError("GaussianProcessModel: dimension unknown for empty bag");
  }
  GpAccumulator acc(dimension, kernel);
  acc.add(data);
  return acc.model();
}

GpPrediction GaussianProcessModel::predict(const Vector& x) const {
  const Eigen::Index p = mean_weights_.size();
  check_dimension("GaussianProcessModel::predict", x.size(), p - 1);
  Vector phi(p);
  phi[0] = kernel_.sigma0;
  phi.tail(p - 1) = x;
  const Vector solved = precision_.matrixL().solve(phi);
  return {phi.dot(mean_weights_), std::max(0.0, solved.squaredNorm())};
}

void GaussianProcessModel::predict_rows(const Matrix& rows, Vector* mean,
                                        Vector* variance) const {
  const Eigen::Index p = mean_weights_.size();
  check_dimension("GaussianProcessModel::predict_rows", rows.cols(), p - 1);
  Matrix phi(p, rows.rows());
  phi.row(0).setConstant(kernel_.sigma0);
  phi.bottomRows(p - 1) = rows.transpose();
  if (mean != nullptr) *mean = phi.transpose() * mean_weights_;
  if (variance != nullptr) {
    precision_.matrixL().solveInPlace(phi);
    *variance = phi.colwise().squaredNorm().transpose().cwiseMax(0.0);
  }
}

GpPrediction gp_fit_predict(const Bag& data, const Vector& query, const GpKernel& kernel) {
  return GaussianProcessModel::fit(data, kernel, query.size()).predict(query);
}

}  // namespace mfcs
