#include "sgmv/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "sgmv/svg.hpp"

namespace sgmv {
namespace {

constexpr const char* kTraceHeader =
    "iter,epoch,loss,full_grad_norm,alpha,beta,gamma_min,gamma_max,fallback_count,wall_ms";

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Sum over coordinates of the divisor-L variance of the rows.
double summed_variance(const RowMatrix& g) {
  const Vector mean = g.colwise().mean().transpose();
  return (g.rowwise() - mean.transpose()).squaredNorm() / static_cast<double>(g.rows());
}

std::string file_stem(const std::string& name) {
  std::string s;
  for (char c : name) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    s += ok ? c : '_';
  }
  return s.empty() ? "dataset" : s;
}

double parse_double(const std::string& field, std::size_t line) {
  if (field.empty()) return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw ParseError(line, "bad number '" + field + "'");
  }
  return v;
}

}  // namespace

void VarianceExperimentConfig::validate() const {
  if (num_checkpoints < 1) throw ArgumentError("num_checkpoints must be >= 1");
  if (num_batches < 2) throw ArgumentError("num_batches must be >= 2");
  if (batch_size < 2) throw ArgumentError("batch_size must be >= 2 for gamma*");
  if (!(gamma_eps > 0.0)) throw ArgumentError("gamma_eps must be positive");
  if (!(cg_grad_tol >= 0.0)) throw ArgumentError("cg_grad_tol must be >= 0");
  wolfe.validate();
}

VarianceExperimentResult variance_experiment(const FiniteSumObjective& obj,
                                             const VarianceExperimentConfig& cfg) {
  cfg.validate();
  const Eigen::Index K = cfg.num_checkpoints;
  const Vector w0 = Vector::Zero(obj.d());
  const double tol = cfg.cg_grad_tol * std::max(1.0, obj.full_grad(w0).norm());
  const CgResult cg = run_full_cg(obj, w0, cfg.wolfe, K + 1, tol);

  VarianceExperimentResult out;
  const auto last = static_cast<Eigen::Index>(cg.iterates.size()) - 1;
  out.target_index = std::min(last, K + 1);
  out.truncated = out.target_index < K + 1;
  const Eigen::Index first = out.target_index >= 2 ? std::max<Eigen::Index>(1, out.target_index - K) : 0;
  const Eigen::Index stop = std::max(first, out.target_index - 1);
  if (out.truncated) {
    warn("CG converged after " + std::to_string(last) + " iterations; using " +
         std::to_string(stop - first + 1) + " checkpoints");
  }
  const Vector& target = cg.iterates[static_cast<std::size_t>(out.target_index)];

  Rng rng(cfg.seed);
  std::vector<std::vector<Eigen::Index>> batches;
  for (Eigen::Index l = 0; l < cfg.num_batches; ++l) {
    batches.push_back(sample_with_replacement(rng, obj.n(), cfg.batch_size));
  }

  RowMatrix star(cfg.num_batches, obj.d()), one(cfg.num_batches, obj.d());
  const Vector ones = Vector::Ones(obj.d());
  for (Eigen::Index k = first; k <= stop; ++k) {
    const Vector& wk = cg.iterates[static_cast<std::size_t>(k)];
    const Vector mu = obj.full_grad(wk);
    for (Eigen::Index l = 0; l < cfg.num_batches; ++l) {
      const BatchGradients bg = gather_batch(obj, target, wk, batches[static_cast<std::size_t>(l)]);
      const Vector xbar = batch_mean(bg.x_grads);
      const Vector ybar = batch_mean(bg.y_grads);
      one.row(l) = sgmv_estimate(xbar, ybar, mu, ones).transpose();
      if (cfg.force_gamma_one) {
        star.row(l) = one.row(l);
      } else {
        const SampleStats st = sample_stats(bg, xbar, ybar);
        const GammaEstimate gamma = gamma_star(st.s_xy, st.s_y2, cfg.gamma_eps);
        star.row(l) = sgmv_estimate(xbar, ybar, mu, gamma.gamma).transpose();
      }
    }
    out.rows.push_back({k, summed_variance(star), summed_variance(one)});
  }
  return out;
}

void write_variance_csv(std::ostream& out, const VarianceExperimentResult& result) {
  out << "k,var_gamma_star,var_gamma_one\n";
  for (const auto& r : result.rows) {
    out << r.k << ',' << fmt(r.var_gamma_star) << ',' << fmt(r.var_gamma_one) << '\n';
  }
}

RunConfig with_iteration_budget(RunConfig cfg, Eigen::Index iters) {
  if (iters < 0) throw ArgumentError("iteration budget must be >= 0");
  if (cfg.algorithm == Algorithm::alg1) {
    cfg.max_iters = iters;
  } else if (cfg.inner > 0) {
    cfg.outer = std::max<Eigen::Index>(1, (iters + cfg.inner - 1) / cfg.inner);
  }
  return cfg;
}

std::vector<RunOutcome> run_grid(const std::vector<NamedObjective>& datasets,
                                 const std::vector<Variant>& variants,
                                 Eigen::Index iters,
                                 const std::vector<std::uint64_t>& seeds,
                                 unsigned threads) {
  if (datasets.empty()) throw ArgumentError("no datasets to compare");
  if (variants.empty()) throw ArgumentError("no variants to compare");
  if (seeds.empty()) throw ArgumentError("no seeds given");
  for (const auto& ds : datasets) {
    if (!ds.objective) throw ArgumentError("dataset '" + ds.name + "' has no objective");
  }
  std::vector<RunConfig> configs;
  for (const auto& v : variants) {
    configs.push_back(with_iteration_budget(v.config, iters));
    configs.back().validate();
    if (v.config.batch_size != variants.front().config.batch_size) {
      warn("variants do not share a batch size; the comparison is not like for like");
    }
  }

  std::vector<RunOutcome> outcomes;
  for (const auto& ds : datasets) {
    for (const auto& v : variants) {
      for (auto s : seeds) outcomes.push_back({ds.name, v.name, s, false, {}, {}});
    }
  }
  const std::size_t nv = variants.size(), ns = seeds.size();
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job; (job = next.fetch_add(1)) < outcomes.size();) {
      const std::size_t di = job / (nv * ns), vi = (job / ns) % nv;
      RunOutcome& o = outcomes[job];
      RunConfig cfg = configs[vi];
      cfg.seed = o.seed;
      try {
        o.trace = run(*datasets[di].objective, cfg);
      } catch (const DivergedError& e) {
        o.failed = true;
        o.error = e.what();
        o.trace = e.partial();
      } catch (const Error& e) {
        o.failed = true;
        o.error = e.what();
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(outcomes.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return outcomes;
}

ComparisonReport build_report(const std::vector<RunOutcome>& outcomes,
                              std::optional<double> log10_threshold) {
  ComparisonReport report;
  // Preserve first-seen order of datasets and variants.
  std::vector<std::string> dataset_order;
  std::map<std::string, std::vector<std::string>> variant_order;
  for (const auto& o : outcomes) {
    if (std::find(dataset_order.begin(), dataset_order.end(), o.dataset) == dataset_order.end()) {
      dataset_order.push_back(o.dataset);
    }
    auto& vs = variant_order[o.dataset];
    if (std::find(vs.begin(), vs.end(), o.variant) == vs.end()) vs.push_back(o.variant);
  }

  for (const auto& ds : dataset_order) {
    DatasetCurves curves;
    curves.dataset = ds;
    curves.variants = variant_order[ds];
    std::vector<Eigen::Index> iters;
    for (const auto& o : outcomes) {
      if (o.dataset != ds || o.failed) continue;
      for (const auto& r : o.trace.records) iters.push_back(r.iter);
    }
    std::sort(iters.begin(), iters.end());
    iters.erase(std::unique(iters.begin(), iters.end()), iters.end());
    curves.iters = iters;

    for (const auto& vname : curves.variants) {
      std::vector<double> sum(iters.size(), 0.0);
      std::vector<int> count(iters.size(), 0);
      SeriesSummary s;
      s.dataset = ds;
      s.variant = vname;
      double final_sum = 0.0;
      for (const auto& o : outcomes) {
        if (o.dataset != ds || o.variant != vname) continue;
        ++s.runs;
        if (o.failed) {
          ++s.failed_runs;
          continue;
        }
        for (const auto& r : o.trace.records) {
          const auto j = static_cast<std::size_t>(
              std::lower_bound(iters.begin(), iters.end(), r.iter) - iters.begin());
          sum[j] += std::log10(r.loss);
          ++count[j];
        }
        if (!o.trace.records.empty()) {
          final_sum += std::log10(o.trace.records.back().loss);
          s.total_wall_ms += o.trace.records.back().wall_ms;
        }
      }
      std::vector<double> mean(iters.size(), std::numeric_limits<double>::quiet_NaN());
      for (std::size_t j = 0; j < iters.size(); ++j) {
        if (count[j] > 0) mean[j] = sum[j] / count[j];
      }
      const int ok = s.runs - s.failed_runs;
      s.final_log10_loss = ok > 0 ? final_sum / ok : std::numeric_limits<double>::quiet_NaN();
      if (log10_threshold) {
        for (std::size_t j = 0; j < iters.size(); ++j) {
          if (count[j] == ok && ok > 0 && mean[j] <= *log10_threshold) {
            s.iters_to_threshold = iters[j];
            break;
          }
        }
      }
      curves.values.push_back(std::move(mean));
      report.summary.push_back(std::move(s));
    }
    report.curves.push_back(std::move(curves));
  }
  return report;
}

ComparisonReport compare_convergence(const std::vector<NamedObjective>& datasets,
                                     const std::vector<Variant>& variants,
                                     Eigen::Index iters,
                                     const std::vector<std::uint64_t>& seeds,
                                     unsigned threads,
                                     std::optional<double> log10_threshold) {
  return build_report(run_grid(datasets, variants, iters, seeds, threads), log10_threshold);
}

void write_curves_csv(std::ostream& out, const DatasetCurves& curves) {
  out << "iter";
  for (const auto& v : curves.variants) out << ',' << v;
  out << '\n';
  for (std::size_t j = 0; j < curves.iters.size(); ++j) {
    out << curves.iters[j];
    for (const auto& col : curves.values) out << ',' << fmt(col[j]);
    out << '\n';
  }
}

void write_summary_csv(std::ostream& out, const ComparisonReport& report) {
  out << "dataset,variant,runs,failed_runs,status,final_log10_loss,iters_to_threshold,total_wall_ms\n";
  for (const auto& s : report.summary) {
    out << s.dataset << ',' << s.variant << ',' << s.runs << ',' << s.failed_runs << ','
        << (s.failed() ? "failed" : s.failed_runs ? "partial" : "ok") << ','
        << fmt(s.final_log10_loss) << ','
        << (s.iters_to_threshold ? std::to_string(*s.iters_to_threshold) : "") << ','
        << fmt(s.total_wall_ms) << '\n';
  }
}

std::vector<std::string> write_report(const ComparisonReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
  std::vector<std::string> written;
  auto open = [&](const fs::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot write '" + p.string() + "'");
    written.push_back(p.string());
    return f;
  };
  for (const auto& c : report.curves) {
    const std::string stem = file_stem(c.dataset);
    {
      auto f = open(fs::path(dir) / ("curves_" + stem + ".csv"));
      write_curves_csv(f, c);
    }
    std::vector<Series> series;
    for (std::size_t v = 0; v < c.variants.size(); ++v) {
      Series s{c.variants[v], {}};
      for (std::size_t j = 0; j < c.iters.size(); ++j) {
        if (!std::isnan(c.values[v][j])) {
          s.points.emplace_back(static_cast<double>(c.iters[j]), c.values[v][j]);
        }
      }
      if (s.points.empty()) {
        warn("variant '" + c.variants[v] + "' has no successful run on '" + c.dataset + "'");
        continue;
      }
      series.push_back(std::move(s));
    }
    if (!series.empty()) {
      const auto path = (fs::path(dir) / ("curves_" + stem + ".svg")).string();
      emit_svg_lines(series, {c.dataset, "iteration", "log10 loss", false}, path);
      written.push_back(path);
    }
  }
  auto f = open(fs::path(dir) / "summary.csv");
  write_summary_csv(f, report);
  return written;
}

void write_trace_csv(std::ostream& out, const RunTrace& trace) {
  out << kTraceHeader << '\n';
  for (const auto& r : trace.records) {
    out << r.iter << ',' << r.epoch << ',' << fmt(r.loss) << ',' << fmt(r.full_grad_norm) << ','
        << fmt(r.alpha) << ',' << fmt(r.beta) << ',' << fmt(r.gamma_min) << ','
        << fmt(r.gamma_max) << ',' << r.fallback_count << ',' << fmt(r.wall_ms) << '\n';
  }
}

RunTrace read_trace_csv(std::istream& in) {
  RunTrace trace;
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) {
    throw ParseError(1, "expected trace header '" + std::string(kTraceHeader) + "'");
  }
  for (std::size_t n = 2; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 10) throw ParseError(n, "expected 10 fields, got " + std::to_string(f.size()));
    TraceRecord r;
    r.iter = static_cast<Eigen::Index>(parse_double(f[0], n));
    r.epoch = static_cast<Eigen::Index>(parse_double(f[1], n));
    r.loss = parse_double(f[2], n);
    r.full_grad_norm = parse_double(f[3], n);
    r.alpha = parse_double(f[4], n);
    r.beta = parse_double(f[5], n);
    r.gamma_min = parse_double(f[6], n);
    r.gamma_max = parse_double(f[7], n);
    r.fallback_count = static_cast<Eigen::Index>(parse_double(f[8], n));
    r.wall_ms = parse_double(f[9], n);
    trace.records.push_back(r);
  }
  return trace;
}

}  // namespace sgmv
