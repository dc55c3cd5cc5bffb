#include "sgmv/optimize.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

namespace sgmv {

GradientTable::GradientTable(const FiniteSumObjective& obj, const Vector& w0)
    : table_(obj.n(), obj.d()), seen_(static_cast<std::size_t>(obj.n()), 0) {
  Vector g;
  for (Eigen::Index i = 0; i < obj.n(); ++i) {
    obj.grad_i(w0, i, g);
    table_.row(i) = g.transpose();
  }
  refresh_mean();
}

void GradientTable::update(std::span<const Eigen::Index> indices,
                           const RowMatrix& fresh) {
  if (static_cast<Eigen::Index>(indices.size()) != fresh.rows() ||
      fresh.cols() != table_.cols()) {
    throw ArgumentError("gradient table update shape mismatch");
  }
  const double inv_n = 1.0 / static_cast<double>(table_.rows());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto j = indices[k];
    if (seen_[static_cast<std::size_t>(j)]) continue;
    seen_[static_cast<std::size_t>(j)] = 1;
    mean_ += inv_n * (fresh.row(static_cast<Eigen::Index>(k)) - table_.row(j)).transpose();
  }
  for (std::size_t k = 0; k < indices.size(); ++k) {
    table_.row(indices[k]) = fresh.row(static_cast<Eigen::Index>(k));
    seen_[static_cast<std::size_t>(indices[k])] = 0;
  }
}

void GradientTable::refresh_mean() { mean_ = batch_mean(table_); }

double GradientTable::mean_drift() const {
  const Vector exact = batch_mean(table_);
  return (mean_ - exact).lpNorm<Eigen::Infinity>() /
         std::max(1.0, exact.lpNorm<Eigen::Infinity>());
}

LineFunction make_line_function(const FiniteSumObjective& obj,
                                const SearchContext& ctx, const Vector& w,
                                const Vector& d) {
  const double cd = ctx.correction.size() ? ctx.correction.dot(d) : 0.0;
  return [&obj, &ctx, &w, &d, cd](double alpha) -> LinePoint {
    const std::span<const Eigen::Index> batch(ctx.batch);
    const Vector p = w + alpha * d;
    const Vector g = ctx.full() ? obj.full_grad(p) : obj.batch_grad(p, batch);
    return {obj.line_delta(w, d, alpha, batch) - alpha * cd, g.dot(d) - cd};
  };
}

void RunConfig::validate() const {
  wolfe.validate();
  if (!full_batch && batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (gamma_mode == GammaMode::star && !full_batch && batch_size < 2) {
    throw ArgumentError("gamma* needs batch_size >= 2");
  }
  if (!(gamma_eps > 0.0)) throw ArgumentError("gamma_eps must be positive");
  if (max_iters < 0) throw ArgumentError("max_iters must be >= 0");
  if (outer < 1) throw ArgumentError("outer loop count T must be >= 1");
  if (inner < 0) throw ArgumentError("inner loop count m must be >= 0");
  if (eval_every < 1) throw ArgumentError("eval_every must be >= 1");
  if (table_refresh_every < 1) throw ArgumentError("table_refresh_every must be >= 1");
  if (!(divergence_factor > 1.0)) throw ArgumentError("divergence_factor must exceed 1");
}

namespace {

using Clock = std::chrono::steady_clock;

/// Shared bookkeeping of both stochastic algorithms: traces, divergence
/// guard, line-search steps and per-iteration estimates.
class Runner {
 public:
  Runner(const FiniteSumObjective& obj, const RunConfig& cfg, const Vector* w0)
      : obj_(obj), cfg_(cfg), rng_(cfg.seed), start_(Clock::now()) {
    cfg_.validate();
    if (w0 && w0->size() != obj.d()) throw ArgumentError("w0 has wrong dimension");
    w_ = w0 ? *w0 : Vector::Zero(obj.d());
    if (!w_.allFinite()) throw ArgumentError("w0 is not finite");
    initial_loss_ = obj_.loss(w_);
    if (!std::isfinite(initial_loss_)) throw NumericError("initial loss is not finite");
  }

  Vector& w() { return w_; }
  RunTrace& trace() { return trace_; }

  void record(Eigen::Index iter, Eigen::Index epoch, double alpha, double beta,
              const GammaEstimate* gamma, bool force = false) {
    if (!force && iter % cfg_.eval_every != 0) return;
    TraceRecord r;
    r.iter = iter;
    r.epoch = epoch;
    r.loss = obj_.loss(w_);
    r.full_grad_norm = obj_.full_grad(w_).norm();
    r.alpha = alpha;
    r.beta = beta;
    if (gamma) {
      r.gamma_min = gamma->min();
      r.gamma_max = gamma->max();
      r.fallback_count = gamma->fallback_count();
    }
    r.wall_ms = elapsed_ms();
    trace_.records.push_back(r);
    const double limit = cfg_.divergence_factor * std::max(initial_loss_, 1e-300);
    if (!std::isfinite(r.loss) || !std::isfinite(r.full_grad_norm) || r.loss > limit) {
      diverge("loss " + std::to_string(r.loss) + " at iteration " + std::to_string(iter));
    }
  }

  [[noreturn]] void diverge(const std::string& why) {
    trace_.final_w = w_;
    throw DivergedError("run diverged: " + why, trace_);
  }

  /// Line search along d from the current point, then the move itself.
  double step(const Vector& d, const SearchContext& ctx, Eigen::Index iter,
              Eigen::Index epoch) {
    LineFunction phi = make_line_function(obj_, ctx, w_, d);
    const LinePoint zero{0.0, phi(0.0).slope};
    WolfeResult res;
    if (zero.slope < 0.0) {
      res = strong_wolfe(phi, zero, cfg_.wolfe);
      if (!res.success) ++trace_.line_search_failures;
    } else {
      // No descent for the current estimate: stay put, resample next time.
      ++trace_.line_search_failures;
    }
    if (cfg_.on_step) {
      cfg_.on_step(StepRecord{iter, epoch, w_, d, &ctx, zero, res});
    }
    w_ += res.alpha * d;
    return res.alpha;
  }

  std::vector<Eigen::Index> draw_batch() {
    if (cfg_.full_batch) {
      std::vector<Eigen::Index> all(static_cast<std::size_t>(obj_.n()));
      std::iota(all.begin(), all.end(), Eigen::Index{0});
      return all;
    }
    return sample_with_replacement(rng_, obj_.n(), cfg_.batch_size);
  }

  struct Estimate {
    Vector g;
    Vector correction;
    GammaEstimate gamma;
  };

  /// g = Xbar - gamma (.) (Ybar - mean), plus the correction it subtracted.
  Estimate estimate(const BatchGradients& bg, const Vector& mean) {
    const Vector xbar = batch_mean(bg.x_grads);
    const Vector ybar = batch_mean(bg.y_grads);
    GammaEstimate gamma = gamma_one(bg.dim());
    if (cfg_.gamma_mode == GammaMode::star) {
      const auto st = sample_stats(bg, xbar, ybar);
      gamma = gamma_star(st.s_xy, st.s_y2, cfg_.gamma_eps);
    }
    Vector g = sgmv_estimate(xbar, ybar, mean, gamma.gamma);
    if (!g.allFinite()) diverge("non-finite gradient estimate");
    Vector c = xbar - g;
    return {std::move(g), std::move(c), std::move(gamma)};
  }

  DirectionUpdate direction(const Vector& g, DirectionState& state) {
    auto upd = update_direction(g, &state);
    if (upd.reset) ++trace_.direction_resets;
    state = DirectionState(g, upd.direction);
    return upd;
  }

  Rng& rng() { return rng_; }

  RunTrace finish() {
    trace_.final_w = w_;
    return std::move(trace_);
  }

 private:
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(Clock::now() - start_).count();
  }

  const FiniteSumObjective& obj_;
  const RunConfig& cfg_;
  Rng rng_;
  Clock::time_point start_;
  Vector w_;
  double initial_loss_ = 0.0;
  RunTrace trace_;
};

}  // namespace

RunTrace run_alg1(const FiniteSumObjective& obj, const RunConfig& cfg, const Vector* w0) {
  if (cfg.algorithm != Algorithm::alg1) throw ArgumentError("run_alg1 needs algorithm = alg1");
  Runner run(obj, cfg, w0);

  GradientTable table(obj, run.w());
  Vector g = table.mean();
  Vector d = -g;
  DirectionState state(g, d);
  SearchContext ctx;  // first step searches the full objective: g_0 is exact
  run.record(0, 0, 0.0, 0.0, nullptr, true);

  for (Eigen::Index k = 1; k <= cfg.max_iters; ++k) {
    const double alpha = run.step(d, ctx, k, 0);

    auto batch = run.draw_batch();
    const auto m = static_cast<Eigen::Index>(batch.size());
    BatchGradients bg{RowMatrix(m, obj.d()), RowMatrix(m, obj.d()), std::move(batch)};
    Vector gj;
    for (Eigen::Index r = 0; r < m; ++r) {
      obj.grad_i(run.w(), bg.indices[r], gj);
      bg.x_grads.row(r) = gj.transpose();
      bg.y_grads.row(r) = table.row(bg.indices[r]);
    }
    auto est = run.estimate(bg, table.mean());
    const auto upd = run.direction(est.g, state);
    d = upd.direction;

    table.update(bg.indices, bg.x_grads);
    if (k % cfg.table_refresh_every == 0) table.refresh_mean();

    ctx = SearchContext{std::move(bg.indices), std::move(est.correction)};
    run.record(k, 0, alpha, upd.beta, &est.gamma, k == cfg.max_iters);
  }
  return run.finish();
}

RunTrace run_alg2(const FiniteSumObjective& obj, const RunConfig& cfg, const Vector* w0) {
  if (cfg.algorithm != Algorithm::alg2) throw ArgumentError("run_alg2 needs algorithm = alg2");
  Runner run(obj, cfg, w0);

  Vector x = run.w();
  Vector h = obj.full_grad(x);
  run.record(0, 0, 0.0, 0.0, nullptr, true);
  run.trace().epoch_loss.push_back(obj.loss(x));

  Eigen::Index iter = 0;
  std::vector<Vector> inner_points;
  for (Eigen::Index l = 1; l <= cfg.outer; ++l) {
    const Vector mu = (l == 1) ? h : obj.full_grad(x);
    const Vector anchor = x;
    run.w() = x;
    Vector g = h;
    Vector d = -g;
    if (!(mu.dot(d) < 0.0)) {
      // The carried-over estimate is not a descent direction for f at the
      // new anchor; restart from the exact gradient.
      g = mu;
      d = -mu;
      ++run.trace().direction_resets;
    }
    DirectionState state(g, d);
    SearchContext ctx;
    inner_points.clear();

    for (Eigen::Index k = 1; k <= cfg.inner; ++k) {
      ++iter;
      const double alpha = run.step(d, ctx, iter, l);
      BatchGradients bg = gather_batch(obj, run.w(), anchor, run.draw_batch());
      auto est = run.estimate(bg, mu);
      const auto upd = run.direction(est.g, state);
      d = upd.direction;
      g = std::move(est.g);
      ctx = SearchContext{std::move(bg.indices), std::move(est.correction)};
      if (cfg.option == OuterOption::random) inner_points.push_back(run.w());
      run.record(iter, l, alpha, upd.beta, &est.gamma, l == cfg.outer && k == cfg.inner);
    }

    h = g;
    if (cfg.option == OuterOption::random && !inner_points.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, inner_points.size() - 1);
      x = inner_points[pick(run.rng())];
    } else {
      x = run.w();
    }
    run.w() = x;
    run.trace().epoch_loss.push_back(obj.loss(x));
  }
  return run.finish();
}

RunTrace run(const FiniteSumObjective& obj, const RunConfig& cfg, const Vector* w0) {
  return cfg.algorithm == Algorithm::alg1 ? run_alg1(obj, cfg, w0) : run_alg2(obj, cfg, w0);
}

CgResult run_full_cg(const FiniteSumObjective& obj, const Vector& w0,
                     const WolfeParams& wolfe, Eigen::Index max_iters, double grad_tol) {
  wolfe.validate();
  CgResult out;
  Vector w = w0;
  Vector g = obj.full_grad(w);
  out.iterates.push_back(w);
  if (g.norm() <= grad_tol) {
    out.converged = true;
    return out;
  }
  Vector d = -g;
  DirectionState state(g, d);
  const SearchContext full;
  for (Eigen::Index k = 0; k < max_iters; ++k) {
    out.descent_ratios.push_back(g.dot(d) / g.squaredNorm());
    LineFunction phi = make_line_function(obj, full, w, d);
    const LinePoint zero{0.0, g.dot(d)};
    if (!(zero.slope < 0.0)) break;
    out.searches.push_back(strong_wolfe(phi, zero, wolfe));
    w += out.searches.back().alpha * d;
    out.iterates.push_back(w);
    g = obj.full_grad(w);
    if (g.norm() <= grad_tol) {
      out.converged = true;
      break;
    }
    d = update_direction(g, &state).direction;
    state = DirectionState(g, d);
  }
  return out;
}

}  // namespace sgmv
