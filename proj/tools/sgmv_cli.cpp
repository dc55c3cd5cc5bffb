// Command-line front end. Talks to the library only through sgmv.h.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sgmv/sgmv.h"

namespace fs = std::filesystem;

namespace {

struct Failure {
  sgmv_status status;
};

void check(sgmv_status s) {
  if (s != SGMV_OK) throw Failure{s};
}

struct DatasetDeleter {
  void operator()(sgmv_dataset* p) const { sgmv_dataset_free(p); }
};
struct TraceDeleter {
  void operator()(sgmv_trace* p) const { sgmv_trace_free(p); }
};
struct ReportDeleter {
  void operator()(sgmv_report* p) const { sgmv_report_free(p); }
};
using DatasetPtr = std::unique_ptr<sgmv_dataset, DatasetDeleter>;
using TracePtr = std::unique_ptr<sgmv_trace, TraceDeleter>;
using ReportPtr = std::unique_ptr<sgmv_report, ReportDeleter>;

struct Options {
  // global
  uint64_t seed = 0;
  std::string out_dir = ".";
  unsigned threads = 0;
  // data
  std::vector<std::string> data;
  int64_t expected_dim = 0;
  std::string scale = "none";
  double lambda = 1e-3;
  // synth
  int64_t n = 1000;
  int64_t d = 10;
  double noise = 0.1;
  std::string output;
  // estimator and line search
  double gamma_eps = 1e-12;
  int64_t batch_size = 64;
  double sigma1 = 1e-4;
  double sigma2 = 0.1;
  double alpha_max = 10.0;
  double alpha_init = 1.0;
  int ls_max_evals = 20;
  // training
  std::string algorithm = "alg1";
  std::string gamma = "star";
  int64_t iters = 100;
  int64_t outer = 20;
  int64_t inner = 50;
  int option = 1;
  int64_t eval_every = 1;
  bool full_batch = false;
  std::string trace;
  double memory_budget_mb = 1024.0;
  // variance experiment
  int64_t checkpoints = 100;
  int64_t batches = 100;
  bool force_gamma_one = false;
  // compare
  std::vector<std::string> variants = {"alg1-star", "alg1-one", "alg2-star", "alg2-one"};
  std::vector<uint64_t> seeds;
  int num_seeds = 5;
  double threshold = std::nan("");
};

fs::path out_path(const Options& o, const std::string& name) {
  fs::create_directories(o.out_dir);
  return fs::path(o.out_dir) / name;
}

fs::path with_parent(fs::path p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p;
}

DatasetPtr load(const Options& o, const std::string& path) {
  sgmv_dataset* raw = nullptr;
  check(sgmv_dataset_load(path.c_str(), o.expected_dim, &raw));
  DatasetPtr ds(raw);
  if (o.scale == "maxmin") {
    check(sgmv_dataset_scale_maxmin(ds.get(), &raw));
    ds.reset(raw);
  }
  return ds;
}

DatasetPtr single_dataset(const Options& o) {
  if (o.data.size() != 1) {
    throw CLI::ValidationError("--data", "exactly one dataset path is required");
  }
  return load(o, o.data.front());
}

sgmv_wolfe wolfe(const Options& o) {
  return {o.sigma1, o.sigma2, o.alpha_init, 1e-10, o.alpha_max, o.ls_max_evals};
}

sgmv_run_config run_config(const Options& o, const std::string& algorithm,
                           const std::string& gamma) {
  sgmv_run_config c;
  sgmv_run_config_init(&c);
  c.algorithm = algorithm == "alg2" ? SGMV_ALG2 : SGMV_ALG1;
  c.gamma_mode = gamma == "one" ? SGMV_GAMMA_ONE : SGMV_GAMMA_STAR;
  c.batch_size = o.batch_size;
  c.full_batch = o.full_batch;
  c.wolfe = wolfe(o);
  c.gamma_eps = o.gamma_eps;
  c.lambda = o.lambda;
  c.max_iters = o.iters;
  c.outer = o.outer;
  c.inner = o.inner;
  c.option = o.option;
  c.seed = o.seed;
  c.eval_every = o.eval_every;
  return c;
}

void warn_memory(const Options& o, const sgmv_dataset* ds, const std::string& algorithm) {
  if (algorithm != "alg1") return;
  const double mb = 8.0 * static_cast<double>(sgmv_dataset_n(ds)) *
                    static_cast<double>(sgmv_dataset_d(ds)) / (1024.0 * 1024.0);
  if (mb > o.memory_budget_mb) {
    std::fprintf(stderr, "warning: gradient table needs %.0f MiB (budget %.0f MiB)\n", mb,
                 o.memory_budget_mb);
  }
}

int cmd_synth(const Options& o) {
  sgmv_dataset* raw = nullptr;
  std::vector<double> w(static_cast<size_t>(std::max<int64_t>(o.d, 0)));
  check(sgmv_dataset_synth(o.n, o.d, o.noise, o.seed, &raw, w.data()));
  DatasetPtr ds(raw);
  const fs::path path = o.output.empty() ? out_path(o, "synth.libsvm") : with_parent(o.output);
  check(sgmv_dataset_save(ds.get(), path.string().c_str()));
  std::ofstream wf(path.string() + ".weights");
  wf.precision(17);
  for (double v : w) wf << v << '\n';
  if (!wf) {
    std::fprintf(stderr, "error: cannot write %s.weights\n", path.string().c_str());
    return SGMV_E_IO;
  }
  std::printf("wrote %s (n=%lld, d=%lld) and planted weights to %s.weights\n",
              path.string().c_str(), static_cast<long long>(o.n), static_cast<long long>(o.d),
              path.string().c_str());
  return 0;
}

int cmd_train(const Options& o) {
  DatasetPtr ds = single_dataset(o);
  warn_memory(o, ds.get(), o.algorithm);
  const sgmv_run_config cfg = run_config(o, o.algorithm, o.gamma);
  sgmv_trace* raw = nullptr;
  const sgmv_status s = sgmv_train(ds.get(), &cfg, nullptr, &raw);
  TracePtr trace(raw);
  if (s != SGMV_OK && s != SGMV_E_DIVERGED) throw Failure{s};
  if (s == SGMV_E_DIVERGED) std::fprintf(stderr, "error: %s\n", sgmv_last_error());
  if (!o.trace.empty() && trace) {
    const fs::path p = fs::path(o.trace).is_absolute() ? with_parent(o.trace) : out_path(o, o.trace);
    check(sgmv_trace_write_csv(trace.get(), p.string().c_str()));
    std::printf("trace: %s\n", p.string().c_str());
  }
  if (trace && sgmv_trace_length(trace.get()) > 0) {
    sgmv_trace_record first{}, last{};
    check(sgmv_trace_record_at(trace.get(), 0, &first));
    check(sgmv_trace_record_at(trace.get(), sgmv_trace_length(trace.get()) - 1, &last));
    std::printf("iterations %lld  loss %.6e -> %.6e  |grad| %.3e  wall %.1f ms\n",
                static_cast<long long>(last.iter), first.loss, last.loss, last.full_grad_norm,
                last.wall_ms);
    std::printf("line-search failures %lld  direction resets %lld\n",
                static_cast<long long>(sgmv_trace_line_search_failures(trace.get())),
                static_cast<long long>(sgmv_trace_direction_resets(trace.get())));
  }
  return s == SGMV_OK ? 0 : static_cast<int>(s);
}

int cmd_variance(const Options& o) {
  DatasetPtr ds = single_dataset(o);
  sgmv_variance_config cfg;
  sgmv_variance_config_init(&cfg);
  cfg.num_checkpoints = o.checkpoints;
  cfg.num_batches = o.batches;
  cfg.batch_size = o.batch_size;
  cfg.seed = o.seed;
  cfg.lambda = o.lambda;
  cfg.gamma_eps = o.gamma_eps;
  cfg.wolfe = wolfe(o);
  cfg.force_gamma_one = o.force_gamma_one;
  std::vector<sgmv_variance_row> rows(static_cast<size_t>(std::max<int64_t>(o.checkpoints, 1)));
  size_t count = 0;
  int64_t target = 0;
  const std::string csv = out_path(o, "variance.csv").string();
  check(sgmv_variance_experiment(ds.get(), &cfg, rows.data(), rows.size(), &count, &target,
                                 csv.c_str()));
  rows.resize(count);

  std::vector<double> xs, ys;
  size_t wins = 0;
  for (int col = 0; col < 2; ++col) {
    for (const auto& r : rows) {
      xs.push_back(static_cast<double>(r.k));
      ys.push_back(col == 0 ? r.var_gamma_star : r.var_gamma_one);
    }
  }
  for (const auto& r : rows) wins += r.var_gamma_star <= r.var_gamma_one;
  const char* names[] = {"gamma*", "gamma=1"};
  const size_t offsets[] = {0, count, 2 * count};
  const std::string svg = out_path(o, "variance.svg").string();
  if (sgmv_svg_lines(names, offsets, 2, xs.data(), ys.data(), "estimator variance", "k",
                     "variance", 1, svg.c_str()) != SGMV_OK) {
    std::fprintf(stderr, "warning: no plot: %s\n", sgmv_last_error());
  }
  std::printf("%zu checkpoints, target iterate %lld; gamma* <= gamma=1 at %zu of %zu\n", count,
              static_cast<long long>(target), wins, count);
  std::printf("wrote %s\n", csv.c_str());
  return 0;
}

int cmd_compare(const Options& o) {
  if (o.data.empty()) throw CLI::ValidationError("--data", "at least one dataset is required");
  static const std::map<std::string, std::pair<std::string, std::string>> known = {
      {"alg1-star", {"alg1", "star"}}, {"alg1-one", {"alg1", "one"}},
      {"alg2-star", {"alg2", "star"}}, {"alg2-one", {"alg2", "one"}}};
  static const std::map<std::string, std::string> label = {{"alg1-star", "Algorithm1"},
                                                           {"alg1-one", "SCGA"},
                                                           {"alg2-star", "Algorithm2"},
                                                           {"alg2-one", "CGVR"}};
  std::vector<DatasetPtr> owned;
  std::vector<const sgmv_dataset*> datasets;
  for (const auto& p : o.data) {
    owned.push_back(load(o, p));
    datasets.push_back(owned.back().get());
    if (std::find(o.variants.begin(), o.variants.end(), "alg1-star") != o.variants.end() ||
        std::find(o.variants.begin(), o.variants.end(), "alg1-one") != o.variants.end()) {
      warn_memory(o, datasets.back(), "alg1");
    }
  }
  std::vector<sgmv_variant> variants;
  for (const auto& v : o.variants) {
    const auto it = known.find(v);
    if (it == known.end()) throw CLI::ValidationError("--variants", "unknown variant " + v);
    variants.push_back({label.at(v).c_str(), run_config(o, it->second.first, it->second.second)});
  }
  std::vector<uint64_t> seeds = o.seeds;
  if (seeds.empty()) {
    for (int i = 0; i < o.num_seeds; ++i) seeds.push_back(o.seed + static_cast<uint64_t>(i));
  }
  sgmv_report* raw = nullptr;
  check(sgmv_compare(datasets.data(), datasets.size(), variants.data(), variants.size(), o.iters,
                     seeds.data(), seeds.size(), o.threads, o.threshold, &raw));
  ReportPtr report(raw);
  fs::create_directories(o.out_dir);
  check(sgmv_report_write(report.get(), o.out_dir.c_str()));
  std::printf("%-28s %-12s %6s %14s %12s\n", "dataset", "variant", "failed", "final log10",
              "wall ms");
  for (size_t i = 0; i < sgmv_report_summary_count(report.get()); ++i) {
    sgmv_summary s{};
    check(sgmv_report_summary_at(report.get(), i, &s));
    std::printf("%-28s %-12s %3d/%-2d %14.6f %12.1f\n", s.dataset, s.variant, s.failed_runs,
                s.runs, s.final_log10_loss, s.total_wall_ms);
  }
  std::printf("report written to %s\n", o.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimized-variance stochastic conjugate gradient experiments"};
  app.set_config("--config", "", "Flat key=value file; command-line flags override it");
  app.require_subcommand(1);
  app.fallthrough();
  Options o;

  app.add_option("--seed", o.seed, "Random seed")->capture_default_str();
  app.add_option("--out-dir", o.out_dir, "Directory for outputs")->capture_default_str();
  app.add_option("--threads", o.threads, "Worker threads for compare (0 = all cores)")
      ->capture_default_str();

  const std::string g_data = "Data";
  app.add_option("--data", o.data, "LIBSVM file(s)")->group(g_data);
  app.add_option("--expected-dim", o.expected_dim, "Feature dimension (0 = infer)")->group(g_data);
  app.add_option("--scale", o.scale, "Feature scaling")
      ->check(CLI::IsMember({"none", "maxmin"}))
      ->capture_default_str()
      ->group(g_data);
  app.add_option("--lambda", o.lambda, "Ridge penalty")->capture_default_str()->group(g_data);

  const std::string g_synth = "Synthetic data";
  app.add_option("--n", o.n, "Samples")->capture_default_str()->group(g_synth);
  app.add_option("--d", o.d, "Features")->capture_default_str()->group(g_synth);
  app.add_option("--noise", o.noise, "Target noise sd")->capture_default_str()->group(g_synth);
  app.add_option("--output", o.output, "Output LIBSVM path")->group(g_synth);

  const std::string g_est = "Estimator and line search";
  app.add_option("--gamma-eps", o.gamma_eps, "Fallback threshold on sample variance")
      ->capture_default_str()->group(g_est);
  app.add_option("--batch-size", o.batch_size, "Mini-batch size")->capture_default_str()->group(g_est);
  app.add_option("--sigma1", o.sigma1, "Sufficient-decrease constant")->capture_default_str()->group(g_est);
  app.add_option("--sigma2", o.sigma2, "Curvature constant")->capture_default_str()->group(g_est);
  app.add_option("--alpha-max", o.alpha_max, "Largest step")->capture_default_str()->group(g_est);
  app.add_option("--alpha-init", o.alpha_init, "First trial step")->capture_default_str()->group(g_est);
  app.add_option("--ls-max-evals", o.ls_max_evals, "Line-search evaluation budget")
      ->capture_default_str()->group(g_est);

  const std::string g_train = "Training";
  app.add_option("--algorithm", o.algorithm)
      ->check(CLI::IsMember({"alg1", "alg2"}))->capture_default_str()->group(g_train);
  app.add_option("--gamma", o.gamma)
      ->check(CLI::IsMember({"star", "one"}))->capture_default_str()->group(g_train);
  app.add_option("--iters", o.iters, "Iterations (alg1; compare budget)")
      ->capture_default_str()->group(g_train);
  app.add_option("--outer", o.outer, "Epochs T (alg2)")->capture_default_str()->group(g_train);
  app.add_option("--inner", o.inner, "Inner iterations m (alg2)")->capture_default_str()->group(g_train);
  app.add_option("--option", o.option, "Alg2 outer point: 1 last, 2 random")
      ->check(CLI::IsMember({1, 2}))->capture_default_str()->group(g_train);
  app.add_option("--eval-every", o.eval_every, "Full-loss evaluation period")
      ->capture_default_str()->group(g_train);
  app.add_flag("--full-batch", o.full_batch, "Use every sample in every batch")->group(g_train);
  app.add_option("--trace", o.trace, "Trace CSV path")->group(g_train);
  app.add_option("--memory-budget-mb", o.memory_budget_mb, "Warn when the gradient table exceeds this")
      ->capture_default_str()->group(g_train);

  const std::string g_var = "Variance experiment";
  app.add_option("--checkpoints", o.checkpoints, "CG iterates used as checkpoints")
      ->capture_default_str()->group(g_var);
  app.add_option("--batches", o.batches, "Mini-batches per checkpoint")->capture_default_str()->group(g_var);
  app.add_flag("--force-gamma-one", o.force_gamma_one, "Self-check: gamma = 1 in both columns")
      ->group(g_var);

  const std::string g_cmp = "Comparison";
  app.add_option("--variants", o.variants, "alg1-star alg1-one alg2-star alg2-one")
      ->group(g_cmp);
  app.add_option("--seeds", o.seeds, "Explicit seed list")->group(g_cmp);
  app.add_option("--num-seeds", o.num_seeds, "Seeds --seed, --seed+1, ... when --seeds is absent")
      ->capture_default_str()->group(g_cmp);
  app.add_option("--threshold", o.threshold, "log10 loss for iterations-to-threshold")->group(g_cmp);

  auto* synth = app.add_subcommand("synth", "Write a synthetic ridge dataset");
  auto* train = app.add_subcommand("train", "Run one optimizer and write its trace");
  auto* variance = app.add_subcommand("variance-exp", "Estimator variance along CG iterates");
  auto* compare = app.add_subcommand("compare", "Convergence of several variants over seeds");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return cmd_synth(o);
    if (*train) return cmd_train(o);
    if (*variance) return cmd_variance(o);
    if (*compare) return cmd_compare(o);
  } catch (const Failure& f) {
    std::fprintf(stderr, "error: %s\n", sgmv_last_error());
    return static_cast<int>(f.status);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
