#pragma once

#include <memory>
#include <span>

#include "sgmv/data.hpp"

namespace sgmv {

/// f(w) = (1/n) sum_i f_i(w). Implementations are immutable and their
/// evaluation methods are safe to call concurrently.
class FiniteSumObjective {
 public:
  virtual ~FiniteSumObjective() = default;

  virtual Eigen::Index n() const = 0;
  virtual Eigen::Index d() const = 0;

  virtual double loss_i(const Vector& w, Eigen::Index i) const = 0;
  /// Writes grad f_i(w) into `out` (resized to d).
  virtual void grad_i(const Vector& w, Eigen::Index i, Vector& out) const = 0;

  Vector grad_i(const Vector& w, Eigen::Index i) const {
    Vector g;
    grad_i(w, i, g);
    return g;
  }

  virtual double loss(const Vector& w) const;
  virtual Vector full_grad(const Vector& w) const;

  /// Mean loss / gradient over a multiset of sample indices; an empty batch
  /// means the full objective.
  virtual double batch_loss(const Vector& w,
                            std::span<const Eigen::Index> batch) const;
  virtual Vector batch_grad(const Vector& w,
                            std::span<const Eigen::Index> batch) const;

  /// f_S(w + alpha d) - f_S(w); an empty batch means the full objective.
  /// Overrides should avoid the cancellation of the naive difference.
  virtual double line_delta(const Vector& w, const Vector& d, double alpha,
                            std::span<const Eigen::Index> batch) const;
};

/// Ridge regression with the regularizer carried by every sample:
/// f_i(w) = (y_i - x_i.w)^2 + lambda ||w||^2.
class RidgeObjective final : public FiniteSumObjective {
 public:
  RidgeObjective(std::shared_ptr<const Dataset> data, double lambda);
  RidgeObjective(Dataset data, double lambda);

  Eigen::Index n() const override { return data_->n(); }
  Eigen::Index d() const override { return data_->d(); }
  double lambda() const noexcept { return lambda_; }
  const Dataset& data() const noexcept { return *data_; }

  double loss_i(const Vector& w, Eigen::Index i) const override;
  void grad_i(const Vector& w, Eigen::Index i, Vector& out) const override;
  using FiniteSumObjective::grad_i;

  double loss(const Vector& w) const override;
  Vector full_grad(const Vector& w) const override;
  double line_delta(const Vector& w, const Vector& d, double alpha,
                    std::span<const Eigen::Index> batch) const override;

  /// f(w) - f(w*) via the exact quadratic form (w-w*)' H (w-w*) / 2, which
  /// does not cancel catastrophically near the minimizer.
  double loss_gap(const Vector& w, const Vector& w_star) const;

 private:
  void check_index(Eigen::Index i) const;

  std::shared_ptr<const Dataset> data_;
  double lambda_;
};

struct ConvexityConstants {
  double mu;
  double L;
};

/// mu = 2 lambda, L = 2 max_i ||x_i||^2 + 2 lambda. Warns when lambda == 0.
ConvexityConstants convexity_constants(const RidgeObjective& obj);

/// Solves ((2/n) X'X + 2 lambda I) w = (2/n) X'y directly.
Vector exact_minimizer(const RidgeObjective& obj);

}  // namespace sgmv
