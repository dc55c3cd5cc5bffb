#include <cmath>

#include "doctest.h"
#include "sgmv/model.hpp"
#include "support.hpp"

using namespace sgmv;

namespace {

RidgeObjective one_sample(std::initializer_list<double> x, double y, double lambda) {
  RowMatrix X(1, static_cast<Eigen::Index>(x.size()));
  Eigen::Index j = 0;
  for (double v : x) X(0, j++) = v;
  return RidgeObjective(Dataset(X, Vector::Constant(1, y)), lambda);
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index j = 0;
  for (double x : v) out(j++) = x;
  return out;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("grad_i examples") {
  CHECK(one_sample({1, 0}, 1, 0.1).grad_i(Vector::Zero(2), 0) == vec({-2, 0}));
  CHECK(one_sample({1, 2}, 3, 0.0).grad_i(vec({1, 1}), 0).isZero(0.0));
  const auto obj = one_sample({1, 2}, 0, 0.5);
  const Vector w = vec({1, 1});
  const Vector g = obj.grad_i(w, 0);
  CHECK(g == vec({7, 13}));
  // central differences
  const double h = 1e-6;
  for (Eigen::Index r = 0; r < 2; ++r) {
    Vector e = Vector::Zero(2);
    e(r) = h;
    const double fd = (obj.loss_i(w + e, 0) - obj.loss_i(w - e, 0)) / (2 * h);
    CHECK(std::abs(fd - g(r)) <= 1e-5);
  }
}

TEST_CASE("grad_i agrees with finite differences for |w| <= 10") {
  const auto obj = test::random_ridge(8, 4, 0.3, 5);
  const double h = 1e-6;
  for (int t = 0; t < 20; ++t) {
    Vector w = test::random_vector(4, 100 + t, 10.0);
    if (w.norm() > 10.0) w *= 10.0 / w.norm();
    const Eigen::Index i = t % obj.n();
    const Vector g = obj.grad_i(w, i);
    for (Eigen::Index r = 0; r < 4; ++r) {
      Vector e = Vector::Zero(4);
      e(r) = h;
      const double fd = (obj.loss_i(w + e, i) - obj.loss_i(w - e, i)) / (2 * h);
      CHECK(std::abs(fd - g(r)) <= 1e-5 * std::max(1.0, std::abs(g(r))));
    }
  }
}

TEST_CASE("loss and full_grad are sample averages") {
  const auto obj = test::random_ridge(13, 5, 0.2, 9);
  const Vector w = test::random_vector(5, 3);
  double loss = 0.0;
  Vector grad = Vector::Zero(5);
  for (Eigen::Index i = 0; i < obj.n(); ++i) {
    loss += obj.loss_i(w, i);
    grad += obj.grad_i(w, i);
  }
  loss /= 13.0;
  grad /= 13.0;
  CHECK(std::abs(obj.loss(w) - loss) <= 1e-10 * std::abs(loss));
  CHECK((obj.full_grad(w) - grad).norm() <= 1e-10 * grad.norm());
  // ridge loss written out by hand
  const Dataset& ds = obj.data();
  const double eq31 = (ds.targets() - ds.features() * w).squaredNorm() / 13.0 +
                      0.2 * w.squaredNorm();
  CHECK(std::abs(obj.loss(w) - eq31) <= 1e-12 * eq31);
}

TEST_CASE("batch loss and gradient over a multiset") {
  const auto obj = test::random_ridge(6, 3, 0.1, 4);
  const Vector w = test::random_vector(3, 8);
  const std::vector<Eigen::Index> batch = {1, 4, 4};
  const double expect = (obj.loss_i(w, 1) + 2 * obj.loss_i(w, 4)) / 3.0;
  CHECK(obj.batch_loss(w, batch) == doctest::Approx(expect).epsilon(1e-14));
  const Vector g = (obj.grad_i(w, 1) + 2 * obj.grad_i(w, 4)) / 3.0;
  CHECK((obj.batch_grad(w, batch) - g).norm() <= 1e-14);
  CHECK(obj.batch_loss(w, {}) == doctest::Approx(obj.loss(w)).epsilon(1e-14));
}

TEST_CASE("line_delta matches the plain difference away from cancellation") {
  const auto obj = test::random_ridge(10, 3, 0.25, 6);
  const Vector w = test::random_vector(3, 1), d = test::random_vector(3, 2);
  const std::vector<Eigen::Index> batch = {0, 3, 3, 9};
  for (double a : {1e-3, 0.1, 2.0}) {
    CHECK(obj.line_delta(w, d, a, batch) ==
          doctest::Approx(obj.batch_loss(w + a * d, batch) - obj.batch_loss(w, batch)).epsilon(1e-9));
    CHECK(obj.line_delta(w, d, a, {}) ==
          doctest::Approx(obj.loss(w + a * d) - obj.loss(w)).epsilon(1e-9));
  }
}

TEST_CASE("index checks") {
  const auto obj = test::random_ridge(3, 2, 0.1, 1);
  CHECK_THROWS_AS(obj.loss_i(Vector::Zero(2), 3), ArgumentError);
  CHECK_THROWS_AS(obj.grad_i(Vector::Zero(2), -1), ArgumentError);
  CHECK_THROWS_AS(RidgeObjective(synth_ridge(3, 2, 0, 1).data, -1.0), ArgumentError);
}

TEST_CASE("convexity constants") {
  const RidgeObjective zero_x(Dataset(RowMatrix::Zero(3, 2), Vector::Ones(3)), 0.5);
  auto c = convexity_constants(zero_x);
  CHECK(c.mu == 1.0);
  CHECK(c.L == 1.0);

  const RidgeObjective unit(Dataset((RowMatrix(2, 2) << 0.6, 0.8, 0.5, 0.1).finished(),
                                    Vector::Ones(2)),
                            0.1);
  c = convexity_constants(unit);
  CHECK(c.mu == doctest::Approx(0.2));
  CHECK(c.L == doctest::Approx(2.2));
  // eigenvalues of 2 x x' + 2 lambda I for the longest row
  const Eigen::Vector2d x(0.6, 0.8);
  const Eigen::Matrix2d H = 2 * x * x.transpose() + 0.2 * Eigen::Matrix2d::Identity();
  const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(H).eigenvalues();
  CHECK(ev(0) == doctest::Approx(c.mu));
  CHECK(ev(1) == doctest::Approx(c.L));

  test::WarningCapture w;
  const auto z = convexity_constants(RidgeObjective(synth_ridge(5, 2, 0, 1).data, 0.0));
  CHECK(z.mu == 0.0);
  CHECK(w.messages.size() == 1);
}

TEST_CASE("exact minimizer") {
  const auto one = one_sample({1}, 2, 1.0);
  CHECK(exact_minimizer(one)(0) == doctest::Approx(1.0).epsilon(1e-14));

  const RidgeObjective zero_y(Dataset(synth_ridge(6, 3, 0, 2).data.features(), Vector::Zero(6)), 0.1);
  CHECK(exact_minimizer(zero_y).norm() <= 1e-15);

  const auto obj = test::random_ridge(15, 4, 0.05, 3);
  CHECK(obj.full_grad(exact_minimizer(obj)).norm() <= 1e-8);
}

TEST_CASE("strong convexity and smoothness bounds") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto obj = test::random_ridge(12, 3, 0.2, s);
    const auto c = convexity_constants(obj);
    const Vector ws = exact_minimizer(obj);
    for (int t = 0; t < 10; ++t) {
      const Vector w = test::random_vector(3, 50 + t, 5.0);
      const double gap = obj.loss_gap(w, ws);
      const double g2 = obj.full_grad(w).squaredNorm();
      CHECK(2 * c.mu * gap <= g2 * (1 + 1e-12));
      CHECK(g2 <= 2 * c.L * gap * (1 + 1e-12));
    }
  }
}

TEST_CASE("loss_gap equals the loss difference") {
  const auto obj = test::random_ridge(20, 4, 0.1, 12);
  const Vector ws = exact_minimizer(obj);
  const Vector w = test::random_vector(4, 77);
  CHECK(obj.loss_gap(w, ws) == doctest::Approx(obj.loss(w) - obj.loss(ws)).epsilon(1e-10));
  CHECK(obj.loss_gap(ws, ws) == 0.0);
}

}  // TEST_SUITE
