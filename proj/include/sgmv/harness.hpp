#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sgmv/model.hpp"
#include "sgmv/optimize.hpp"

namespace sgmv {

struct VarianceExperimentConfig {
  Eigen::Index num_checkpoints = 100;
  Eigen::Index num_batches = 100;
  Eigen::Index batch_size = 64;
  std::uint64_t seed = 0;
  double gamma_eps = kDefaultGammaEps;
  /// Line search of the full-batch CG that generates the checkpoints.
  WolfeParams wolfe;
  /// CG stops early once ||grad|| <= cg_grad_tol * max(1, ||grad f(w0)||).
  double cg_grad_tol = 1e-12;
  /// Self-check: use gamma = 1 for both columns.
  bool force_gamma_one = false;

  void validate() const;
};

struct VarianceRow {
  Eigen::Index k = 0;
  double var_gamma_star = 0.0;
  double var_gamma_one = 0.0;
};

struct VarianceExperimentResult {
  std::vector<VarianceRow> rows;
  /// Index K+1 of the CG iterate used as the target point.
  Eigen::Index target_index = 0;
  /// True when CG produced fewer iterates than requested.
  bool truncated = false;
};

/// Collects iterates w_0..w_K of full-batch CG from w = 0, fixes the target
/// w_{K+1}, draws L batches once, and for every checkpoint w_k reports the
/// empirical variance over batches (divisor L, summed over coordinates) of
/// the estimate of grad f(w_{K+1}) with gamma* and with gamma = 1.
VarianceExperimentResult variance_experiment(const FiniteSumObjective& obj,
                                             const VarianceExperimentConfig& cfg);

void write_variance_csv(std::ostream& out, const VarianceExperimentResult& result);

struct NamedObjective {
  std::string name;
  std::shared_ptr<const FiniteSumObjective> objective;
};

struct Variant {
  std::string name;
  RunConfig config;
};

struct RunOutcome {
  std::string dataset;
  std::string variant;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  /// Full trace, or the partial one for a diverged run.
  RunTrace trace;
};

struct DatasetCurves {
  std::string dataset;
  std::vector<std::string> variants;
  std::vector<Eigen::Index> iters;
  /// values[v][j]: seed-mean log10 loss of variant v at iters[j]; NaN where
  /// no successful run has a record.
  std::vector<std::vector<double>> values;
};

struct SeriesSummary {
  std::string dataset;
  std::string variant;
  int runs = 0;
  int failed_runs = 0;
  /// Seed-mean log10 loss at the last iteration; NaN if every run failed.
  double final_log10_loss = 0.0;
  std::optional<Eigen::Index> iters_to_threshold;
  /// Sum over successful runs of their final wall time.
  double total_wall_ms = 0.0;

  bool failed() const noexcept { return runs == failed_runs; }
};

struct ComparisonReport {
  std::vector<DatasetCurves> curves;
  std::vector<SeriesSummary> summary;
};

/// Applies the common iteration budget: max_iters for the table algorithm,
/// ceil(iters / m) epochs for the epoch algorithm.
RunConfig with_iteration_budget(RunConfig cfg, Eigen::Index iters);

/// Runs every (dataset, variant, seed) on up to `threads` workers. Failures
/// are recorded in the outcome, never thrown. Outcomes come back in
/// dataset-major, variant, seed order regardless of scheduling.
std::vector<RunOutcome> run_grid(const std::vector<NamedObjective>& datasets,
                                 const std::vector<Variant>& variants,
                                 Eigen::Index iters,
                                 const std::vector<std::uint64_t>& seeds,
                                 unsigned threads);

/// Pure aggregation of stored outcomes.
ComparisonReport build_report(const std::vector<RunOutcome>& outcomes,
                              std::optional<double> log10_threshold = std::nullopt);

ComparisonReport compare_convergence(const std::vector<NamedObjective>& datasets,
                                     const std::vector<Variant>& variants,
                                     Eigen::Index iters,
                                     const std::vector<std::uint64_t>& seeds,
                                     unsigned threads,
                                     std::optional<double> log10_threshold = std::nullopt);

void write_curves_csv(std::ostream& out, const DatasetCurves& curves);
void write_summary_csv(std::ostream& out, const ComparisonReport& report);
/// Writes curves_<dataset>.csv, curves_<dataset>.svg and summary.csv into
/// `dir` (created if missing). Returns the paths written.
std::vector<std::string> write_report(const ComparisonReport& report,
                                      const std::string& dir);

void write_trace_csv(std::ostream& out, const RunTrace& trace);
/// Reads back the records written by write_trace_csv (bit-exact).
RunTrace read_trace_csv(std::istream& in);

}  // namespace sgmv
