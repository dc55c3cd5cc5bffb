#include <cmath>

#include "doctest.h"
#include "sgmv/search.hpp"
#include "support.hpp"

using namespace sgmv;

namespace {

bool satisfies_wolfe(const LineFunction& phi, double alpha, const WolfeParams& p) {
  const LinePoint z = phi(0.0), a = phi(alpha);
  return a.value <= z.value + p.sigma1 * alpha * z.slope &&
         std::abs(a.slope) <= -p.sigma2 * z.slope;
}

Vector vec(double a, double b) { return (Vector(2) << a, b).finished(); }

}  // namespace

TEST_SUITE("search") {

TEST_CASE("quadratic (a-1)^2") {
  const LineFunction phi = [](double a) { return LinePoint{(a - 1) * (a - 1), 2 * (a - 1)}; };
  const WolfeParams p;
  const auto r = strong_wolfe(phi, p);
  CHECK(r.success);
  CHECK(r.alpha >= 0.9);
  CHECK(r.alpha <= 1.1);
  CHECK(satisfies_wolfe(phi, r.alpha, p));
}

TEST_CASE("ascent direction is rejected") {
  const LineFunction phi = [](double a) { return LinePoint{a, 1.0}; };
  CHECK_THROWS_AS(strong_wolfe(phi, WolfeParams{}), NotDescentError);
}

TEST_CASE("stationary point satisfies curvature for any sigma2") {
  const LineFunction phi = [](double a) { return LinePoint{(a - 2) * (a - 2), 2 * (a - 2)}; };
  WolfeParams p;
  for (double s2 : {0.01, 0.1, 0.4}) {
    p.sigma2 = s2;
    CHECK(satisfies_wolfe(phi, 2.0, p));
  }
}

TEST_CASE("accepted steps re-satisfy both conditions") {
  const WolfeParams p;
  int accepted = 0;
  for (int t = 0; t < 200; ++t) {
    // phi(a) = c a^4/4 + b a^2/2 - s a with varied scales
    const double c = 0.01 * (t % 7), b = 0.05 + 0.3 * (t % 11), s = 0.1 + (t % 5);
    const LineFunction phi = [=](double a) {
      return LinePoint{c * a * a * a * a / 4 + b * a * a / 2 - s * a, c * a * a * a + b * a - s};
    };
    const auto r = strong_wolfe(phi, p);
    if (r.success) {
      ++accepted;
      CHECK(satisfies_wolfe(phi, r.alpha, p));
    }
    CHECK(r.alpha >= p.alpha_min);
    CHECK(r.alpha <= p.alpha_max);
  }
  CHECK(accepted > 150);
}

TEST_CASE("exhausted budget falls back without claiming success") {
  WolfeParams p;
  p.max_evals = 2;
  p.alpha_init = 1e-3;
  // very flat far minimum: the curvature condition needs many expansions
  const LineFunction phi = [](double a) { return LinePoint{-a + 1e-4 * a * a, -1 + 2e-4 * a}; };
  const auto r = strong_wolfe(phi, p);
  CHECK_FALSE(r.success);
  CHECK(r.sufficient_decrease);
  CHECK(r.evals <= 2);
}

TEST_CASE("wolfe parameter validation") {
  WolfeParams p;
  CHECK_NOTHROW(p.validate());
  p.sigma1 = 0.2;
  p.sigma2 = 0.1;
  CHECK_THROWS_AS(p.validate(), ArgumentError);
  p = WolfeParams{};
  p.alpha_init = 20.0;
  CHECK_THROWS_AS(p.validate(), ArgumentError);
  p = WolfeParams{};
  p.max_evals = 0;
  CHECK_THROWS_AS(p.validate(), ArgumentError);
  p = WolfeParams{};
  p.sigma2 = 0.7;
  test::WarningCapture w;
  CHECK_NOTHROW(p.validate());
  CHECK(w.messages.size() == 1);
}

TEST_CASE("beta examples") {
  const DirectionState same(vec(1, 2), vec(-1, -2));
  CHECK(*beta_prp_fr(vec(1, 2), same) == 0.0);
  const DirectionState orth(vec(1, 0), vec(-1, 0));
  CHECK(*beta_prp_fr(vec(0, 1), orth) == 1.0);
  // g_new'(g_new - g_prev) < 0
  const DirectionState big(vec(2, 0), vec(-2, 0));
  CHECK(*beta_prp_fr(vec(1, 0), big) == 0.0);
  const DirectionState zero(vec(0, 0), vec(0, 0));
  CHECK_FALSE(beta_prp_fr(vec(1, 0), zero).has_value());
}

TEST_CASE("beta bounded by FR") {
  for (int t = 0; t < 100; ++t) {
    const Vector gp = test::random_vector(4, t), gn = test::random_vector(4, 1000 + t);
    const DirectionState st(gp, -gp);
    const double b = *beta_prp_fr(gn, st);
    CHECK(b >= 0.0);
    CHECK(b <= gn.squaredNorm() / gp.squaredNorm() * (1 + 1e-15));
    CHECK(st.g_prev_norm2() == doctest::Approx(gp.squaredNorm()).epsilon(1e-12));
  }
}

TEST_CASE("direction update") {
  const Vector g = vec(0.3, -0.4);
  auto u = update_direction(g, nullptr);
  CHECK(u.direction == -g);
  const DirectionState st(g, -g);
  u = update_direction(g, &st);  // beta = 0
  CHECK(u.beta == 0.0);
  CHECK(u.direction == -g);
  for (int t = 0; t < 100; ++t) {
    const Vector gp = test::random_vector(3, t), gn = test::random_vector(3, 500 + t);
    const DirectionState s(gp, test::random_vector(3, 900 + t, 10.0));
    const auto r = update_direction(gn, &s);
    CHECK(gn.dot(r.direction) < 0.0);
  }
}

}  // TEST_SUITE
