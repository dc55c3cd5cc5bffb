#include <cmath>

#include "doctest.h"
#include "sgmv/estimator.hpp"
#include "support.hpp"

using namespace sgmv;

namespace {

BatchGradients columns(std::initializer_list<double> x, std::initializer_list<double> y) {
  BatchGradients bg;
  bg.x_grads.resize(static_cast<Eigen::Index>(x.size()), 1);
  bg.y_grads.resize(static_cast<Eigen::Index>(y.size()), 1);
  Eigen::Index i = 0;
  for (double v : x) bg.x_grads(i++, 0) = v;
  i = 0;
  for (double v : y) bg.y_grads(i++, 0) = v;
  for (Eigen::Index j = 0; j < bg.x_grads.rows(); ++j) bg.indices.push_back(j);
  return bg;
}

}  // namespace

TEST_SUITE("estimator") {

TEST_CASE("sample statistics examples") {
  auto st = sample_stats(columns({1, 2, 3}, {2, 4, 6}));
  CHECK(st.s_xy(0) == 2.0);
  CHECK(st.s_y2(0) == 4.0);
  st = sample_stats(columns({1, 5, 3}, {7, 7, 7}));
  CHECK(st.s_xy(0) == 0.0);
  CHECK(st.s_y2(0) == 0.0);
  st = sample_stats(columns({1.5, -2, 0.25}, {1.5, -2, 0.25}));
  CHECK(st.s_xy(0) == st.s_y2(0));
  CHECK_THROWS_AS(sample_stats(columns({1}, {2})), ArgumentError);
}

TEST_CASE("gamma_star examples") {
  auto g = gamma_star(Vector::Constant(1, 2.0), Vector::Constant(1, 4.0), 1e-12);
  CHECK(g.gamma(0) == 0.5);
  CHECK_FALSE(g.fallback(0));
  g = gamma_star(Vector::Constant(1, 0.0), Vector::Constant(1, 0.0), 1e-12);
  CHECK(g.gamma(0) == 1.0);
  CHECK(g.fallback(0));
  g = gamma_star(Vector::Constant(1, 3e-5), Vector::Constant(1, 3e-5), 1e-12);
  CHECK(g.gamma(0) == 1.0);
  CHECK_FALSE(g.fallback(0));
  CHECK(g.fallback_count() == 0);
  const auto one = gamma_one(3);
  CHECK(one.gamma == Vector::Ones(3));
  CHECK(one.fallback_count() == 0);
}

TEST_CASE("sgmv_estimate reductions") {
  const auto obj = test::random_ridge(10, 3, 0.1, 2);
  const Vector w = test::random_vector(3, 4), phi = test::random_vector(3, 5);
  const BatchGradients bg = gather_batch(obj, w, phi, {0, 2, 2, 7});
  const Vector mu = obj.full_grad(phi);
  const Vector xbar = batch_mean(bg.x_grads), ybar = batch_mean(bg.y_grads);
  CHECK(sgmv_estimate(bg, mu, Vector::Ones(3)) == xbar - (ybar - mu));
  CHECK(sgmv_estimate(bg, ybar, Vector::Constant(3, 0.37)) == xbar);
  CHECK(sgmv_estimate(bg, mu, Vector::Zero(3)) == xbar);
  CHECK_THROWS_AS(sgmv_estimate(bg, Vector::Zero(2), Vector::Ones(3)), DimensionError);
}

TEST_CASE("gamma_star is scale equivariant") {
  const auto obj = test::random_ridge(12, 4, 0.2, 7);
  const Vector w = test::random_vector(4, 1), phi = test::random_vector(4, 2);
  BatchGradients bg = gather_batch(obj, w, phi, {1, 3, 5, 5, 8, 11});
  const Vector mu = obj.full_grad(phi);
  const auto st = sample_stats(bg);
  const auto g = gamma_star(st.s_xy, st.s_y2);
  const Vector corr = g.gamma.cwiseProduct(batch_mean(bg.y_grads) - mu);
  const double c = -3.5;
  bg.y_grads *= c;
  const auto st2 = sample_stats(bg);
  const auto g2 = gamma_star(st2.s_xy, st2.s_y2);
  CHECK((g2.gamma * c - g.gamma).norm() <= 1e-12 * g.gamma.norm());
  const Vector corr2 = g2.gamma.cwiseProduct(batch_mean(bg.y_grads) - c * mu);
  CHECK((corr2 - corr).norm() <= 1e-12 * corr.norm());
}

TEST_CASE("sampling with replacement") {
  Rng a(5), b(5);
  const auto s = sample_with_replacement(a, 7, 1000);
  CHECK(s == sample_with_replacement(b, 7, 1000));
  std::vector<int> hits(7, 0);
  for (auto i : s) {
    REQUIRE(i >= 0);
    REQUIRE(i < 7);
    ++hits[static_cast<std::size_t>(i)];
  }
  for (int h : hits) CHECK(h > 0);
  CHECK_THROWS_AS(sample_with_replacement(a, 0, 3), ArgumentError);
}

TEST_CASE("batch validation") {
  BatchGradients bg = columns({1, 2}, {1, 2});
  CHECK_NOTHROW(bg.validate());
  bg.indices.pop_back();
  CHECK_THROWS_AS(bg.validate(), DimensionError);
  CHECK_NOTHROW(columns({1}, {2}).validate());
}

TEST_CASE("Monte-Carlo variance: perfect correlation at phi = w") {
  const auto obj = test::random_ridge(15, 3, 0.1, 3);
  const Vector w = test::random_vector(3, 9);
  const auto vc = mc_variance_check(obj, w, w, 5, 500, 1);
  CHECK(vc.total_star() <= 1e-20);
  CHECK(vc.total_one() <= 1e-20);
  CHECK(vc.total_plain() > 1e-3);
}

TEST_CASE("Monte-Carlo variance ordering on random instances") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto obj = test::random_ridge(40, 4, 0.1, 20 + s);
    const Vector w = test::random_vector(4, s), phi = w + test::random_vector(4, 50 + s, 0.5);
    const auto vc = mc_variance_check(obj, w, phi, 16, 1000, s);
    CHECK(vc.total_star() <= vc.total_one() * 1.1);
    CHECK(vc.total_star() <= vc.total_plain() * 1.1);
  }
}

}  // TEST_SUITE
