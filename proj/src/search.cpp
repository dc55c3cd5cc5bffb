#include "sgmv/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sgmv/error.hpp"

namespace sgmv {

void WolfeParams::validate() const {
  if (!(sigma1 > 0.0 && sigma1 < sigma2 && sigma2 < 1.0)) {
    throw ArgumentError("Wolfe parameters need 0 < sigma1 < sigma2 < 1");
  }
  if (!(alpha_min > 0.0 && alpha_min <= alpha_init && alpha_init <= alpha_max) ||
      !std::isfinite(alpha_max)) {
    throw ArgumentError("step bounds need 0 < alpha_min <= alpha_init <= alpha_max < inf");
  }
  if (max_evals < 1) throw ArgumentError("line search needs max_evals >= 1");
  if (sigma2 >= 0.5) {
    warn("sigma2 >= 1/2: descent-direction guarantee of PRP-FR CG does not apply");
  }
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Bracket {
  double alpha;
  LinePoint pt;
};

class Search {
 public:
  Search(const LineFunction& phi, LinePoint zero, const WolfeParams& p)
      : phi_(phi), zero_(zero), p_(p) {}

  WolfeResult run() {
    Bracket prev{0.0, zero_};
    double a = p_.alpha_init;
    while (evals_ < p_.max_evals) {
      LinePoint pt = eval(a);
      if (!finite(pt) || !armijo(a, pt) || (evals_ > 1 && pt.value >= prev.pt.value)) {
        return zoom(prev, {a, pt});
      }
      if (curvature(pt)) return done(a, pt);
      if (pt.slope >= 0.0) return zoom({a, pt}, prev);
      if (a >= p_.alpha_max) break;
      double next = 2.0 * a;
      if (pt.slope > prev.pt.slope) {
        // Secant step on the slope; exact for quadratics.
        const double secant = a - pt.slope * (a - prev.alpha) / (pt.slope - prev.pt.slope);
        next = std::clamp(secant, 1.1 * a, 10.0 * a);
      }
      prev = {a, pt};
      a = std::min(next, p_.alpha_max);
    }
    return fallback();
  }

 private:
  LinePoint eval(double a) {
    ++evals_;
    return phi_(a);
  }

  static bool finite(const LinePoint& pt) {
    return std::isfinite(pt.value) && std::isfinite(pt.slope);
  }

  bool armijo(double a, const LinePoint& pt) {
    const bool ok = pt.value <= zero_.value + p_.sigma1 * a * zero_.slope;
    if (ok && (!have_best_ || pt.value < best_.pt.value)) {
      best_ = {a, pt};
      have_best_ = true;
    }
    return ok;
  }

  bool curvature(const LinePoint& pt) const {
    return std::abs(pt.slope) <= -p_.sigma2 * zero_.slope;
  }

  WolfeResult zoom(Bracket lo, Bracket hi) {
    while (evals_ < p_.max_evals) {
      const double left = std::min(lo.alpha, hi.alpha);
      const double width = std::abs(hi.alpha - lo.alpha);
      if (width <= 1e-16 * std::max(1.0, left)) break;

      double a = 0.5 * (lo.alpha + hi.alpha);
      if (finite(hi.pt)) {
        const double h = hi.alpha - lo.alpha;
        const double curv = hi.pt.value - lo.pt.value - lo.pt.slope * h;
        if (curv > 0.0) {
          const double q = lo.alpha - lo.pt.slope * h * h / (2.0 * curv);
          if (q >= left + 0.1 * width && q <= left + 0.9 * width) a = q;
        }
      }
      LinePoint pt = eval(a);
      if (!finite(pt) || !armijo(a, pt) || pt.value >= lo.pt.value) {
        hi = {a, pt};
        continue;
      }
      if (curvature(pt)) return done(a, pt);
      if (pt.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
      lo = {a, pt};
    }
    return fallback();
  }

  WolfeResult done(double a, const LinePoint& pt) {
    WolfeResult r{a, evals_, true, true, pt};
    return clamp(r);
  }

  WolfeResult fallback() {
    if (have_best_) return clamp({best_.alpha, evals_, false, true, best_.pt});
    return {p_.alpha_min, evals_, false, false, {kNaN, kNaN}};
  }

  WolfeResult clamp(WolfeResult r) const {
    const double c = std::clamp(r.alpha, p_.alpha_min, p_.alpha_max);
    if (c != r.alpha) {
      r.alpha = c;
      r.success = false;
      r.sufficient_decrease = false;
      r.at_alpha = {kNaN, kNaN};
    }
    return r;
  }

  const LineFunction& phi_;
  LinePoint zero_;
  const WolfeParams& p_;
  int evals_ = 0;
  Bracket best_{};
  bool have_best_ = false;
};

}  // namespace

WolfeResult strong_wolfe(const LineFunction& phi, LinePoint at_zero,
                         const WolfeParams& params) {
  if (!(at_zero.slope < 0.0)) {
    throw NotDescentError("line search needs phi'(0) < 0, got " +
                          std::to_string(at_zero.slope));
  }
  if (!std::isfinite(at_zero.value)) throw NumericError("phi(0) is not finite");
  return Search(phi, at_zero, params).run();
}

WolfeResult strong_wolfe(const LineFunction& phi, const WolfeParams& params) {
  return strong_wolfe(phi, phi(0.0), params);
}

DirectionState::DirectionState(Vector g_prev, Vector d_prev)
    : g_prev_(std::move(g_prev)),
      d_prev_(std::move(d_prev)),
      g_prev_norm2_(g_prev_.squaredNorm()) {
  if (g_prev_.size() != d_prev_.size()) {
    throw ArgumentError("direction state vectors differ in length");
  }
}

std::optional<double> beta_prp_fr(const Vector& g_new, const DirectionState& state) {
  const double n2 = state.g_prev_norm2();
  if (n2 <= kRestartNorm2) return std::nullopt;
  const double prp = g_new.dot(g_new - state.g_prev()) / n2;
  const double fr = g_new.squaredNorm() / n2;
  return std::max(0.0, std::min(prp, fr));
}

DirectionUpdate update_direction(const Vector& g_new, const DirectionState* state) {
  if (state == nullptr) return {-g_new, 0.0, false};
  const auto beta = beta_prp_fr(g_new, *state);
  if (!beta) return {-g_new, 0.0, true};
  Vector d = -g_new + *beta * state->d_prev();
  if (!(g_new.dot(d) < 0.0)) return {-g_new, 0.0, true};
  return {std::move(d), *beta, false};
}

}  // namespace sgmv
