#pragma once

#include <functional>
#include <optional>

#include "sgmv/data.hpp"

namespace sgmv {

struct WolfeParams {
  double sigma1 = 1e-4;
  double sigma2 = 0.1;
  double alpha_init = 1.0;
  double alpha_min = 1e-10;
  double alpha_max = 10.0;
  int max_evals = 20;

  /// Throws ArgumentError on violated bounds; warns when sigma2 >= 1/2.
  void validate() const;
};

/// Value and derivative of a one-dimensional restriction phi(alpha).
struct LinePoint {
  double value;
  double slope;
};

using LineFunction = std::function<LinePoint(double)>;

struct WolfeResult {
  double alpha = 0.0;
  int evals = 0;
  /// Both strong Wolfe conditions hold at the returned alpha.
  bool success = false;
  /// Sufficient decrease holds (true whenever success is).
  bool sufficient_decrease = false;
  LinePoint at_alpha{};
};

/// Bracket-then-zoom search with safeguarded quadratic interpolation for
///   phi(a) <= phi(0) + sigma1 a phi'(0)   and   |phi'(a)| <= -sigma2 phi'(0).
/// On exhaustion returns the best sufficient-decrease point seen, or
/// alpha_min; either way `success` is false. Throws NotDescentError when
/// phi'(0) >= 0.
WolfeResult strong_wolfe(const LineFunction& phi, const WolfeParams& params);

/// Same, for callers that already hold phi(0).
WolfeResult strong_wolfe(const LineFunction& phi, LinePoint at_zero,
                         const WolfeParams& params);

class DirectionState {
 public:
  DirectionState(Vector g_prev, Vector d_prev);

  const Vector& g_prev() const noexcept { return g_prev_; }
  const Vector& d_prev() const noexcept { return d_prev_; }
  double g_prev_norm2() const noexcept { return g_prev_norm2_; }

 private:
  Vector g_prev_;
  Vector d_prev_;
  double g_prev_norm2_;
};

inline constexpr double kRestartNorm2 = 1e-300;

/// max(0, min(beta_PRP, beta_FR)); nullopt signals a restart when
/// ||g_prev||^2 is numerically zero.
std::optional<double> beta_prp_fr(const Vector& g_new,
                                  const DirectionState& state);

struct DirectionUpdate {
  Vector direction;
  double beta = 0.0;
  /// Steepest descent was forced (restart signal or non-descent).
  bool reset = false;
};

/// -g_new + beta d_prev; falls back to -g_new when the result is not a
/// descent direction for g_new. Without a state (first iteration) returns
/// -g_new.
DirectionUpdate update_direction(const Vector& g_new,
                                 const DirectionState* state);

}  // namespace sgmv
