#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "sgmv/model.hpp"

namespace sgmv {

using Rng = std::mt19937_64;
using BoolArray = Eigen::Array<bool, Eigen::Dynamic, 1>;

/// Draws `size` indices uniformly from [0, n), independently (duplicates
/// allowed).
std::vector<Eigen::Index> sample_with_replacement(Rng& rng, Eigen::Index n,
                                                  Eigen::Index size);

/// Per-sample gradients of one mini-batch at the current point (rows of
/// x_grads) and at the checkpoint (rows of y_grads).
struct BatchGradients {
  RowMatrix x_grads;
  RowMatrix y_grads;
  std::vector<Eigen::Index> indices;

  Eigen::Index batch_size() const noexcept { return x_grads.rows(); }
  Eigen::Index dim() const noexcept { return x_grads.cols(); }
  /// Throws ArgumentError when the shapes disagree or the batch is empty.
  void validate() const;
};

/// Evaluates grad f_j at `w` and at `phi` for every j in `indices`.
BatchGradients gather_batch(const FiniteSumObjective& obj, const Vector& w,
                            const Vector& phi,
                            std::vector<Eigen::Index> indices);

/// Row average accumulated in index order.
Vector batch_mean(const RowMatrix& rows);

struct SampleStats {
  Vector s_xy;
  Vector s_y2;
};

/// Unbiased per-coordinate sample covariance of (X, Y) and sample variance
/// of Y over the batch. Requires at least two rows.
SampleStats sample_stats(const BatchGradients& bg);
/// Same, reusing precomputed batch means of x_grads and y_grads.
SampleStats sample_stats(const BatchGradients& bg, const Vector& xbar,
                         const Vector& ybar);

struct GammaEstimate {
  Vector gamma;
  Vector s_xy;
  Vector s_y2;
  BoolArray fallback;

  Eigen::Index fallback_count() const { return fallback.count(); }
  double min() const { return gamma.size() ? gamma.minCoeff() : 1.0; }
  double max() const { return gamma.size() ? gamma.maxCoeff() : 1.0; }
};

inline constexpr double kDefaultGammaEps = 1e-12;

/// gamma[r] = s_xy[r] / s_y2[r], or 1 (flagged) where s_y2[r] < eps.
GammaEstimate gamma_star(const Vector& s_xy, const Vector& s_y2,
                         double eps = kDefaultGammaEps);

/// The SAGA/SVRG coefficient: gamma = 1 in every coordinate, no statistics.
GammaEstimate gamma_one(Eigen::Index d);

/// Xbar - gamma (.) (Ybar - checkpoint_mean).
Vector sgmv_estimate(const BatchGradients& bg, const Vector& checkpoint_mean,
                     const Vector& gamma);
/// Same, from precomputed batch means.
Vector sgmv_estimate(const Vector& xbar, const Vector& ybar,
                     const Vector& checkpoint_mean, const Vector& gamma);
inline Vector sgmv_estimate(const BatchGradients& bg,
                            const Vector& checkpoint_mean,
                            const GammaEstimate& gamma) {
  return sgmv_estimate(bg, checkpoint_mean, gamma.gamma);
}

struct VarianceCheck {
  Vector var_gamma_star;
  Vector var_gamma_one;
  Vector var_plain;
  /// Mean of the gamma* estimates over the trials.
  Vector mean_gamma_star;

  double total_star() const { return var_gamma_star.sum(); }
  double total_one() const { return var_gamma_one.sum(); }
  double total_plain() const { return var_plain.sum(); }
};

/// Monte-Carlo variance of theta_{gamma*}, theta_1 and Xbar at a fixed
/// (w, phi), with the checkpoint mean taken as full_grad(phi).
VarianceCheck mc_variance_check(const FiniteSumObjective& obj, const Vector& w,
                                const Vector& phi, Eigen::Index batch_size,
                                int trials, std::uint64_t seed,
                                double eps = kDefaultGammaEps);

}  // namespace sgmv
