#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sgmv/error.hpp"
#include "sgmv/estimator.hpp"
#include "sgmv/search.hpp"

namespace sgmv {

enum class Algorithm { alg1, alg2 };
enum class GammaMode { star, one };
/// Outer-point choice of the epoch algorithm: last inner iterate (I) or a
/// uniformly chosen one (II).
enum class OuterOption { last, random };

/// Per-sample gradient table with its running mean. Rows hold the most
/// recently evaluated gradient of each sample.
class GradientTable {
 public:
  /// Fills every row with grad f_i(w0), streaming straight into the table.
  GradientTable(const FiniteSumObjective& obj, const Vector& w0);

  const RowMatrix& table() const noexcept { return table_; }
  const Vector& mean() const noexcept { return mean_; }
  auto row(Eigen::Index i) const { return table_.row(i); }

  /// Overwrites rows `indices` with `fresh` (row k belongs to indices[k])
  /// and updates the mean incrementally; duplicates count once.
  void update(std::span<const Eigen::Index> indices, const RowMatrix& fresh);

  /// Recomputes the mean from scratch.
  void refresh_mean();

  /// Largest relative deviation between the stored and recomputed mean.
  double mean_drift() const;

 private:
  RowMatrix table_;
  Vector mean_;
  std::vector<std::uint8_t> seen_;
};

/// The one-dimensional function handed to the line search:
///   phi(a) = f_S(w + a d) - a c'd,  phi'(a) = (grad f_S(w + a d) - c)'d
/// where c is the control-variate correction of the current estimate, so
/// phi'(0) equals the estimate's directional derivative. An empty batch
/// means the full objective.
struct SearchContext {
  std::vector<Eigen::Index> batch;
  Vector correction;

  bool full() const noexcept { return batch.empty(); }
};

LineFunction make_line_function(const FiniteSumObjective& obj,
                                const SearchContext& ctx, const Vector& w,
                                const Vector& d);

/// One accepted move w -> w + alpha d together with the data needed to
/// re-check it.
struct StepRecord {
  Eigen::Index iter = 0;
  Eigen::Index epoch = 0;
  Vector point;
  Vector direction;
  const SearchContext* context = nullptr;
  LinePoint at_zero{};
  WolfeResult search;
};

using StepObserver = std::function<void(const StepRecord&)>;

struct RunConfig {
  Algorithm algorithm = Algorithm::alg1;
  GammaMode gamma_mode = GammaMode::star;
  Eigen::Index batch_size = 64;
  /// Replace sampling by the whole index set (deterministic runs).
  bool full_batch = false;
  WolfeParams wolfe;
  double gamma_eps = kDefaultGammaEps;
  /// Iterations of the table algorithm.
  Eigen::Index max_iters = 100;
  /// Outer (T) and inner (m) loop lengths of the epoch algorithm.
  Eigen::Index outer = 20;
  Eigen::Index inner = 50;
  OuterOption option = OuterOption::last;
  std::uint64_t seed = 0;
  Eigen::Index eval_every = 1;
  Eigen::Index table_refresh_every = 1000;
  double divergence_factor = 1e6;
  StepObserver on_step;

  void validate() const;
};

struct TraceRecord {
  Eigen::Index iter = 0;
  Eigen::Index epoch = 0;
  double loss = 0.0;
  double full_grad_norm = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma_min = 1.0;
  double gamma_max = 1.0;
  Eigen::Index fallback_count = 0;
  double wall_ms = 0.0;
};

struct RunTrace {
  std::vector<TraceRecord> records;
  /// Full loss at each outer point x_0..x_T (epoch algorithm only).
  std::vector<double> epoch_loss;
  Vector final_w;
  Eigen::Index line_search_failures = 0;
  Eigen::Index direction_resets = 0;
};

class DivergedError : public Error {
 public:
  DivergedError(const std::string& what, RunTrace partial)
      : Error(ErrorCode::diverged, what), partial_(std::move(partial)) {}
  const RunTrace& partial() const noexcept { return partial_; }

 private:
  RunTrace partial_;
};

/// Gradient-table stochastic CG (SCGA layout) with the SGMV estimate, or the
/// plain gamma = 1 estimate in GammaMode::one.
RunTrace run_alg1(const FiniteSumObjective& obj, const RunConfig& cfg,
                  const Vector* w0 = nullptr);

/// Epoch stochastic CG (CGVR layout) with the SGMV estimate, or gamma = 1.
RunTrace run_alg2(const FiniteSumObjective& obj, const RunConfig& cfg,
                  const Vector* w0 = nullptr);

RunTrace run(const FiniteSumObjective& obj, const RunConfig& cfg,
             const Vector* w0 = nullptr);

struct CgResult {
  std::vector<Vector> iterates;
  /// <g_k, d_k> / ||g_k||^2 for every direction used.
  std::vector<double> descent_ratios;
  std::vector<WolfeResult> searches;
  bool converged = false;
};

/// Deterministic full-gradient PRP-FR conjugate gradient. Stops after
/// `max_iters` steps or when ||grad|| <= grad_tol.
CgResult run_full_cg(const FiniteSumObjective& obj, const Vector& w0,
                     const WolfeParams& wolfe, Eigen::Index max_iters,
                     double grad_tol);

}  // namespace sgmv
