#include "sgmv/model.hpp"

#include <cmath>

#include "sgmv/error.hpp"

namespace sgmv {

double FiniteSumObjective::loss(const Vector& w) const {
  double s = 0.0;
  for (Eigen::Index i = 0; i < n(); ++i) s += loss_i(w, i);
  return s / static_cast<double>(n());
}

Vector FiniteSumObjective::full_grad(const Vector& w) const {
  Vector acc = Vector::Zero(d());
  Vector g;
  for (Eigen::Index i = 0; i < n(); ++i) {
    grad_i(w, i, g);
    acc += g;
  }
  return acc / static_cast<double>(n());
}

double FiniteSumObjective::batch_loss(const Vector& w,
                                      std::span<const Eigen::Index> batch) const {
  if (batch.empty()) return loss(w);
  double s = 0.0;
  for (auto i : batch) s += loss_i(w, i);
  return s / static_cast<double>(batch.size());
}

Vector FiniteSumObjective::batch_grad(const Vector& w,
                                      std::span<const Eigen::Index> batch) const {
  if (batch.empty()) return full_grad(w);
  Vector acc = Vector::Zero(d());
  Vector g;
  for (auto i : batch) {
    grad_i(w, i, g);
    acc += g;
  }
  return acc / static_cast<double>(batch.size());
}

double FiniteSumObjective::line_delta(const Vector& w, const Vector& d, double alpha,
                                      std::span<const Eigen::Index> batch) const {
  const Vector p = w + alpha * d;
  if (batch.empty()) return loss(p) - loss(w);
  return batch_loss(p, batch) - batch_loss(w, batch);
}

RidgeObjective::RidgeObjective(std::shared_ptr<const Dataset> data, double lambda)
    : data_(std::move(data)), lambda_(lambda) {
  if (!data_) throw ArgumentError("ridge objective needs a dataset");
  if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) {
    throw ArgumentError("lambda must be finite and nonnegative");
  }
}

RidgeObjective::RidgeObjective(Dataset data, double lambda)
    : RidgeObjective(std::make_shared<const Dataset>(std::move(data)), lambda) {}

void RidgeObjective::check_index(Eigen::Index i) const {
  if (i < 0 || i >= n()) {
    throw ArgumentError("sample index " + std::to_string(i) +
                        " out of range [0, " + std::to_string(n()) + ")");
  }
}

double RidgeObjective::loss_i(const Vector& w, Eigen::Index i) const {
  check_index(i);
  const double r = data_->targets()(i) - data_->row(i).dot(w);
  return r * r + lambda_ * w.squaredNorm();
}

void RidgeObjective::grad_i(const Vector& w, Eigen::Index i, Vector& out) const {
  check_index(i);
  const double r = data_->targets()(i) - data_->row(i).dot(w);
  out = (-2.0 * r) * data_->row(i).transpose() + (2.0 * lambda_) * w;
}

double RidgeObjective::loss(const Vector& w) const {
  const Vector r = data_->targets() - data_->features() * w;
  return r.squaredNorm() / static_cast<double>(n()) + lambda_ * w.squaredNorm();
}

Vector RidgeObjective::full_grad(const Vector& w) const {
  const Vector r = data_->targets() - data_->features() * w;
  return (-2.0 / static_cast<double>(n())) * (data_->features().transpose() * r) +
         (2.0 * lambda_) * w;
}

double RidgeObjective::line_delta(const Vector& w, const Vector& d, double alpha,
                                  std::span<const Eigen::Index> batch) const {
  // (r - a s)^2 - r^2 = a s (a s - 2 r) per sample, plus the regularizer change.
  const double reg = lambda_ * alpha * (2.0 * w.dot(d) + alpha * d.squaredNorm());
  double acc = 0.0;
  if (batch.empty()) {
    const Vector s = data_->features() * d;
    const Vector r = data_->targets() - data_->features() * w;
    acc = (alpha * s.array() * (alpha * s.array() - 2.0 * r.array())).sum() /
          static_cast<double>(n());
  } else {
    for (auto i : batch) {
      check_index(i);
      const double s = data_->row(i).dot(d);
      const double r = data_->targets()(i) - data_->row(i).dot(w);
      acc += alpha * s * (alpha * s - 2.0 * r);
    }
    acc /= static_cast<double>(batch.size());
  }
  return acc + reg;
}

double RidgeObjective::loss_gap(const Vector& w, const Vector& w_star) const {
  const Vector e = w - w_star;
  return (data_->features() * e).squaredNorm() / static_cast<double>(n()) +
         lambda_ * e.squaredNorm();
}

ConvexityConstants convexity_constants(const RidgeObjective& obj) {
  if (obj.lambda() == 0.0) {
    warn("lambda = 0: ridge objective is not strongly convex (mu = 0)");
  }
  const double max_row2 = obj.data().features().rowwise().squaredNorm().maxCoeff();
  return {2.0 * obj.lambda(), 2.0 * max_row2 + 2.0 * obj.lambda()};
}

Vector exact_minimizer(const RidgeObjective& obj) {
  const auto& x = obj.data().features();
  const double scale = 2.0 / static_cast<double>(obj.n());
  Eigen::MatrixXd a = scale * (x.transpose() * x);
  a.diagonal().array() += 2.0 * obj.lambda();
  const Vector b = scale * (x.transpose() * obj.data().targets());

  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success) {
    throw NumericError("normal equations could not be factorized");
  }
  Vector w = ldlt.solve(b);
  if (!w.allFinite()) throw NumericError("normal-equation solve produced non-finite values");
  const double resid = (a * w - b).norm();
  if (resid > 1e-8 * (1.0 + b.norm())) {
    throw NumericError("normal equations are singular or ill-conditioned (residual " +
                       std::to_string(resid) + ")");
  }
  return w;
}

}  // namespace sgmv
