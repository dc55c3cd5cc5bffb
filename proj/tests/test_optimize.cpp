#include <algorithm>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "sgmv/optimize.hpp"
#include "support.hpp"

using namespace sgmv;

namespace {

// Ridge whose full loss turns NaN once ||w|| exceeds a radius.
class PoisonedRidge final : public FiniteSumObjective {
 public:
  PoisonedRidge(RidgeObjective inner, double radius)
      : inner_(std::move(inner)), radius_(radius) {}
  Eigen::Index n() const override { return inner_.n(); }
  Eigen::Index d() const override { return inner_.d(); }
  double loss_i(const Vector& w, Eigen::Index i) const override { return inner_.loss_i(w, i); }
  void grad_i(const Vector& w, Eigen::Index i, Vector& out) const override {
    inner_.grad_i(w, i, out);
  }
  double loss(const Vector& w) const override {
    return w.norm() > radius_ ? std::numeric_limits<double>::quiet_NaN() : inner_.loss(w);
  }
  double line_delta(const Vector& w, const Vector& d, double a,
                    std::span<const Eigen::Index> batch) const override {
    return inner_.line_delta(w, d, a, batch);
  }

 private:
  RidgeObjective inner_;
  double radius_;
};

RunConfig alg1(GammaMode mode, std::uint64_t seed, Eigen::Index iters = 100) {
  RunConfig c;
  c.algorithm = Algorithm::alg1;
  c.gamma_mode = mode;
  c.seed = seed;
  c.max_iters = iters;
  c.batch_size = 16;
  return c;
}

RunConfig alg2(GammaMode mode, std::uint64_t seed, Eigen::Index outer = 2, Eigen::Index inner = 50) {
  RunConfig c;
  c.algorithm = Algorithm::alg2;
  c.gamma_mode = mode;
  c.seed = seed;
  c.outer = outer;
  c.inner = inner;
  c.batch_size = 16;
  return c;
}

double loss_at(const RunTrace& t, Eigen::Index iter) {
  for (const auto& r : t.records) {
    if (r.iter == iter) return r.loss;
  }
  FAIL("no record at iteration " << iter);
  return 0.0;
}

bool same_records(const RunTrace& a, const RunTrace& b) {
  if (a.records.size() != b.records.size()) return false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto &x = a.records[i], &y = b.records[i];
    if (x.iter != y.iter || x.epoch != y.epoch || x.loss != y.loss ||
        x.full_grad_norm != y.full_grad_norm || x.alpha != y.alpha || x.beta != y.beta ||
        x.gamma_min != y.gamma_min || x.gamma_max != y.gamma_max ||
        x.fallback_count != y.fallback_count) {
      return false;
    }
  }
  return a.final_w == b.final_w;
}

}  // namespace

TEST_SUITE("optimize") {

TEST_CASE("gradient table update semantics") {
  const auto obj = test::random_ridge(9, 3, 0.1, 1);
  const Vector w0 = test::random_vector(3, 2), w1 = test::random_vector(3, 3);
  GradientTable table(obj, w0);
  const RowMatrix before = table.table();
  const std::vector<Eigen::Index> idx = {2, 5, 2};
  RowMatrix fresh(3, 3);
  for (int k = 0; k < 3; ++k) fresh.row(k) = obj.grad_i(w1, idx[static_cast<std::size_t>(k)]).transpose();
  table.update(idx, fresh);
  for (Eigen::Index j = 0; j < 9; ++j) {
    if (j == 2 || j == 5) {
      CHECK(table.row(j) == obj.grad_i(w1, j).transpose());
    } else {
      CHECK(table.row(j) == before.row(j));
    }
  }
  const Vector recomputed = table.table().colwise().mean().transpose();
  CHECK((table.mean() - recomputed).norm() <= 1e-12 * recomputed.norm());
}

TEST_CASE("incremental table mean does not drift") {
  const auto obj = test::random_ridge(50, 4, 0.1, 4);
  GradientTable table(obj, Vector::Zero(4));
  Rng rng(3);
  for (int t = 0; t < 2000; ++t) {
    const auto idx = sample_with_replacement(rng, 50, 8);
    const Vector w = test::random_vector(4, static_cast<std::uint64_t>(t), 3.0);
    RowMatrix fresh(8, 4);
    for (int k = 0; k < 8; ++k) fresh.row(k) = obj.grad_i(w, idx[static_cast<std::size_t>(k)]).transpose();
    table.update(idx, fresh);
  }
  CHECK(table.mean_drift() <= 1e-8);
  table.refresh_mean();
  CHECK(table.mean_drift() == 0.0);
}

TEST_CASE("full-batch table algorithm follows deterministic CG") {
  const auto s = synth_ridge(60, 5, 0.1, 8);
  const RidgeObjective obj(s.data, 0.05);
  RunConfig c = alg1(GammaMode::star, 0, 8);
  c.full_batch = true;
  std::vector<Vector> points;
  c.on_step = [&](const StepRecord& r) { points.push_back(r.point); };
  const RunTrace t = run(obj, c);
  const CgResult cg = run_full_cg(obj, Vector::Zero(5), c.wolfe, 8, 0.0);
  points.push_back(t.final_w);
  REQUIRE(points.size() == cg.iterates.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    CHECK((points[k] - cg.iterates[k]).norm() <= 1e-8 * std::max(1.0, cg.iterates[k].norm()));
  }
}

TEST_CASE("table algorithm reaches 1e-4 of the initial gap in 100 iterations") {
  const auto s = synth_ridge(200, 10, 0.1, 1);
  const RidgeObjective obj(s.data, 1e-3);
  const Vector ws = exact_minimizer(obj);
  const double gap0 = obj.loss_gap(Vector::Zero(10), ws);
  RunConfig c = alg1(GammaMode::star, 1);
  c.batch_size = 64;
  const RunTrace t = run(obj, c);
  CHECK(obj.loss_gap(t.final_w, ws) <= 1e-4 * gap0);
}

TEST_CASE("epoch algorithm with an empty inner loop returns x0") {
  const auto obj = test::random_ridge(20, 3, 0.1, 2);
  RunConfig c = alg2(GammaMode::star, 0, 1, 0);
  const Vector w0 = test::random_vector(3, 7);
  const RunTrace t = run(obj, c, &w0);
  CHECK(t.final_w == w0);
  REQUIRE(t.records.size() == 1);
  CHECK(t.records[0].iter == 0);
  CHECK(t.records[0].loss == obj.loss(w0));
}

TEST_CASE("runs are deterministic and traces well formed") {
  const auto s = synth_ridge(300, 6, 0.1, 5);
  const RidgeObjective obj(s.data, 1e-3);
  for (const RunConfig& c : {alg1(GammaMode::star, 9), alg1(GammaMode::one, 9),
                             alg2(GammaMode::star, 9), alg2(GammaMode::one, 9)}) {
    const RunTrace a = run(obj, c), b = run(obj, c);
    CHECK(same_records(a, b));
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      const auto& r = a.records[i];
      if (i > 0) CHECK(r.iter > a.records[i - 1].iter);
      for (double v : {r.loss, r.full_grad_norm, r.alpha, r.beta, r.gamma_min, r.gamma_max, r.wall_ms}) {
        CHECK(std::isfinite(v));
      }
    }
  }
}

TEST_CASE("eval_every thins the trace but keeps both ends") {
  const auto obj = test::random_ridge(40, 3, 0.1, 6);
  RunConfig c = alg1(GammaMode::star, 2, 23);
  c.eval_every = 5;
  const RunTrace t = run(obj, c);
  std::vector<Eigen::Index> iters;
  for (const auto& r : t.records) iters.push_back(r.iter);
  CHECK(iters == std::vector<Eigen::Index>{0, 5, 10, 15, 20, 23});
}

TEST_CASE("median progress from iteration 10 to 100 for all variants") {
  const auto s = synth_ridge(500, 8, 0.1, 3);
  const RidgeObjective obj(s.data, 1e-3);
  for (int v = 0; v < 4; ++v) {
    std::vector<double> at10, at100;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const GammaMode m = v % 2 ? GammaMode::one : GammaMode::star;
      const RunTrace t = run(obj, v < 2 ? alg1(m, seed) : alg2(m, seed));
      at10.push_back(loss_at(t, 10));
      at100.push_back(loss_at(t, 100));
    }
    std::sort(at10.begin(), at10.end());
    std::sort(at100.begin(), at100.end());
    CHECK(at100[5] < at10[5]);
  }
}

TEST_CASE("option II picks a stored inner iterate") {
  const auto obj = test::random_ridge(60, 4, 0.1, 10);
  RunConfig c = alg2(GammaMode::star, 4, 3, 10);
  c.option = OuterOption::random;
  const RunTrace a = run(obj, c), b = run(obj, c);
  CHECK(same_records(a, b));
  CHECK(a.epoch_loss.size() == 4);
  c.option = OuterOption::last;
  CHECK_FALSE(same_records(a, run(obj, c)));
}

TEST_CASE("epoch losses are full losses at the outer points") {
  const auto obj = test::random_ridge(60, 4, 0.1, 11);
  RunConfig c = alg2(GammaMode::star, 1, 3, 10);
  const RunTrace t = run(obj, c);
  REQUIRE(t.epoch_loss.size() == 4);
  CHECK(t.epoch_loss.front() == obj.loss(Vector::Zero(4)));
  CHECK(t.epoch_loss.back() == obj.loss(t.final_w));
}

TEST_CASE("observer sees every accepted step") {
  const auto obj = test::random_ridge(30, 3, 0.1, 12);
  RunConfig c = alg1(GammaMode::star, 3, 15);
  int calls = 0;
  c.on_step = [&](const StepRecord& r) {
    ++calls;
    CHECK(r.context != nullptr);
    CHECK(r.at_zero.slope < 0.0);
    CHECK(r.iter == calls);
  };
  const RunTrace t = run(obj, c);
  CHECK(calls + t.line_search_failures == 15);
}

TEST_CASE("non-finite loss aborts with the partial trace") {
  const auto s = synth_ridge(100, 4, 0.1, 2);
  const RidgeObjective ridge(s.data, 1e-3);
  const double radius = 0.5 * exact_minimizer(ridge).norm();
  const PoisonedRidge obj(ridge, radius);
  RunConfig c = alg1(GammaMode::star, 1, 50);
  try {
    run(obj, c);
    FAIL("expected divergence");
  } catch (const DivergedError& e) {
    CHECK(e.code() == ErrorCode::diverged);
    CHECK_FALSE(e.partial().records.empty());
    CHECK(e.partial().records.front().iter == 0);
  }
}

TEST_CASE("configuration validation") {
  const auto obj = test::random_ridge(10, 2, 0.1, 1);
  RunConfig c = alg1(GammaMode::star, 0);
  c.batch_size = 1;
  CHECK_THROWS_AS(run(obj, c), ArgumentError);
  c.gamma_mode = GammaMode::one;
  CHECK_NOTHROW(c.validate());
  c = alg2(GammaMode::star, 0, 0, 5);
  CHECK_THROWS_AS(run(obj, c), ArgumentError);
  c = alg1(GammaMode::star, 0);
  c.eval_every = 0;
  CHECK_THROWS_AS(run(obj, c), ArgumentError);
}

TEST_CASE("deterministic CG descent ratios") {
  const auto obj = test::random_ridge(30, 5, 0.1, 13);
  const CgResult cg = run_full_cg(obj, Vector::Zero(5), WolfeParams{}, 30, 1e-10);
  CHECK(cg.converged);
  CHECK(cg.descent_ratios.front() == -1.0);
  for (double r : cg.descent_ratios) CHECK(r < 0.0);
}

}  // TEST_SUITE
