#include "sgmv/estimator.hpp"

#include "sgmv/error.hpp"

namespace sgmv {

std::vector<Eigen::Index> sample_with_replacement(Rng& rng, Eigen::Index n,
                                                  Eigen::Index size) {
  if (n <= 0 || size <= 0) throw ArgumentError("sampling needs n > 0 and size > 0");
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  std::vector<Eigen::Index> out(static_cast<std::size_t>(size));
  for (auto& i : out) i = pick(rng);
  return out;
}

void BatchGradients::validate() const {
  if (x_grads.rows() < 1) throw ArgumentError("empty batch");
  if (x_grads.rows() != y_grads.rows() || x_grads.cols() != y_grads.cols()) {
    throw DimensionError("x_grads and y_grads differ in shape");
  }
  if (static_cast<Eigen::Index>(indices.size()) != x_grads.rows()) {
    throw DimensionError("indices length does not match batch size");
  }
}

BatchGradients gather_batch(const FiniteSumObjective& obj, const Vector& w,
                            const Vector& phi, std::vector<Eigen::Index> indices) {
  const auto m = static_cast<Eigen::Index>(indices.size());
  BatchGradients bg{RowMatrix(m, obj.d()), RowMatrix(m, obj.d()), std::move(indices)};
  Vector g;
  for (Eigen::Index k = 0; k < m; ++k) {
    obj.grad_i(w, bg.indices[k], g);
    bg.x_grads.row(k) = g.transpose();
    obj.grad_i(phi, bg.indices[k], g);
    bg.y_grads.row(k) = g.transpose();
  }
  return bg;
}

Vector batch_mean(const RowMatrix& rows) {
  Vector acc = Vector::Zero(rows.cols());
  for (Eigen::Index k = 0; k < rows.rows(); ++k) acc += rows.row(k).transpose();
  return acc / static_cast<double>(rows.rows());
}

SampleStats sample_stats(const BatchGradients& bg) {
  bg.validate();
  return sample_stats(bg, batch_mean(bg.x_grads), batch_mean(bg.y_grads));
}

SampleStats sample_stats(const BatchGradients& bg, const Vector& xbar,
                         const Vector& ybar) {
  bg.validate();
  const Eigen::Index m = bg.batch_size();
  if (m < 2) throw ArgumentError("sample statistics need a batch of at least 2");
  const Eigen::Index d = bg.dim();
  if (xbar.size() != d || ybar.size() != d) throw DimensionError("batch means differ in dimension");

  SampleStats st{Vector::Zero(d), Vector::Zero(d)};
  double* sxy = st.s_xy.data();
  double* sy2 = st.s_y2.data();
  const double* xb = xbar.data();
  const double* yb = ybar.data();
  for (Eigen::Index k = 0; k < m; ++k) {
    const double* x = bg.x_grads.row(k).data();
    const double* y = bg.y_grads.row(k).data();
    for (Eigen::Index r = 0; r < d; ++r) {
      const double dx = x[r] - xb[r];
      const double dy = y[r] - yb[r];
      sxy[r] += dx * dy;
      sy2[r] += dy * dy;
    }
  }
  const double denom = static_cast<double>(m - 1);
  st.s_xy /= denom;
  st.s_y2 /= denom;
  return st;
}

GammaEstimate gamma_star(const Vector& s_xy, const Vector& s_y2, double eps) {
  if (s_xy.size() != s_y2.size()) throw DimensionError("s_xy and s_y2 differ in length");
  if (!(eps > 0.0)) throw ArgumentError("gamma eps must be positive");
  const Eigen::Index d = s_xy.size();
  GammaEstimate est{Vector(d), s_xy, s_y2, BoolArray::Constant(d, false)};
  for (Eigen::Index r = 0; r < d; ++r) {
    if (s_y2(r) >= eps) {
      est.gamma(r) = s_xy(r) / s_y2(r);
    } else {
      est.gamma(r) = 1.0;
      est.fallback(r) = true;
    }
  }
  return est;
}

GammaEstimate gamma_one(Eigen::Index d) {
  return {Vector::Ones(d), Vector::Zero(d), Vector::Zero(d),
          BoolArray::Constant(d, false)};
}

Vector sgmv_estimate(const BatchGradients& bg, const Vector& checkpoint_mean,
                     const Vector& gamma) {
  bg.validate();
  if (checkpoint_mean.size() != bg.dim() || gamma.size() != bg.dim()) {
    throw DimensionError("estimate inputs differ in dimension");
  }
  return sgmv_estimate(batch_mean(bg.x_grads), batch_mean(bg.y_grads),
                       checkpoint_mean, gamma);
}

Vector sgmv_estimate(const Vector& xbar, const Vector& ybar,
                     const Vector& checkpoint_mean, const Vector& gamma) {
  if (ybar.size() != xbar.size() || checkpoint_mean.size() != xbar.size() ||
      gamma.size() != xbar.size()) {
    throw DimensionError("estimate inputs differ in dimension");
  }
  return xbar - gamma.cwiseProduct(ybar - checkpoint_mean);
}

VarianceCheck mc_variance_check(const FiniteSumObjective& obj, const Vector& w,
                                const Vector& phi, Eigen::Index batch_size,
                                int trials, std::uint64_t seed, double eps) {
  if (trials < 2) throw ArgumentError("variance check needs at least 2 trials");
  if (batch_size < 2) throw ArgumentError("variance check needs batch_size >= 2");
  const Eigen::Index d = obj.d();
  const Vector mean_phi = obj.full_grad(phi);
  const Vector ones = Vector::Ones(d);

  RowMatrix star(trials, d), one(trials, d), plain(trials, d);
  Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    auto bg = gather_batch(obj, w, phi, sample_with_replacement(rng, obj.n(), batch_size));
    auto st = sample_stats(bg);
    star.row(t) = sgmv_estimate(bg, mean_phi, gamma_star(st.s_xy, st.s_y2, eps)).transpose();
    one.row(t) = sgmv_estimate(bg, mean_phi, ones).transpose();
    plain.row(t) = batch_mean(bg.x_grads).transpose();
  }

  auto column_variance = [trials](const RowMatrix& m) {
    const Eigen::RowVectorXd mu = m.colwise().mean();
    return Vector(((m.rowwise() - mu).array().square().colwise().sum() /
                   static_cast<double>(trials - 1))
                      .transpose());
  };
  return {column_variance(star), column_variance(one), column_variance(plain),
          Vector(star.colwise().mean().transpose())};
}

}  // namespace sgmv
