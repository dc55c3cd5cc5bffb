#include "sgmv/sgmv.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <thread>

#include "json.hpp"

#include "sgmv/data.hpp"
#include "sgmv/harness.hpp"
#include "sgmv/model.hpp"
#include "sgmv/optimize.hpp"
#include "sgmv/svg.hpp"

struct sgmv_dataset {
  std::shared_ptr<const sgmv::Dataset> data;
};

struct sgmv_trace {
  sgmv::RunTrace trace;
};

struct sgmv_report {
  sgmv::ComparisonReport report;
};

namespace {

thread_local std::string g_last_error;

sgmv_status fail(sgmv_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

// Runs `fn`, translating exceptions into status codes.
template <class F>
sgmv_status guarded(F&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const sgmv::Error& e) {
    return fail(static_cast<sgmv_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SGMV_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SGMV_E_INTERNAL, e.what());
  } catch (...) {
    return fail(SGMV_E_INTERNAL, "unknown error");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw sgmv::ArgumentError(what);
}

std::optional<Eigen::Index> dim_hint(int64_t expected_dim) {
  if (expected_dim <= 0) return std::nullopt;
  return static_cast<Eigen::Index>(expected_dim);
}

sgmv::WolfeParams to_wolfe(const sgmv_wolfe& w) {
  sgmv::WolfeParams p;
  p.sigma1 = w.sigma1;
  p.sigma2 = w.sigma2;
  p.alpha_init = w.alpha_init;
  p.alpha_min = w.alpha_min;
  p.alpha_max = w.alpha_max;
  p.max_evals = w.max_evals;
  return p;
}

sgmv_wolfe from_wolfe(const sgmv::WolfeParams& p) {
  return {p.sigma1, p.sigma2, p.alpha_init, p.alpha_min, p.alpha_max,
          static_cast<int32_t>(p.max_evals)};
}

sgmv::RunConfig to_run_config(const sgmv_run_config& c) {
  sgmv::RunConfig r;
  switch (c.algorithm) {
    case SGMV_ALG1: r.algorithm = sgmv::Algorithm::alg1; break;
    case SGMV_ALG2: r.algorithm = sgmv::Algorithm::alg2; break;
    default: throw sgmv::ArgumentError("algorithm must be 1 or 2");
  }
  switch (c.gamma_mode) {
    case SGMV_GAMMA_STAR: r.gamma_mode = sgmv::GammaMode::star; break;
    case SGMV_GAMMA_ONE: r.gamma_mode = sgmv::GammaMode::one; break;
    default: throw sgmv::ArgumentError("gamma_mode must be star (0) or one (1)");
  }
  switch (c.option) {
    case 1: r.option = sgmv::OuterOption::last; break;
    case 2: r.option = sgmv::OuterOption::random; break;
    default: throw sgmv::ArgumentError("option must be 1 or 2");
  }
  r.batch_size = c.batch_size;
  r.full_batch = c.full_batch != 0;
  r.wolfe = to_wolfe(c.wolfe);
  r.gamma_eps = c.gamma_eps;
  r.max_iters = c.max_iters;
  r.outer = c.outer;
  r.inner = c.inner;
  r.seed = c.seed;
  r.eval_every = c.eval_every;
  r.table_refresh_every = c.table_refresh_every;
  r.divergence_factor = c.divergence_factor;
  r.validate();
  return r;
}

std::shared_ptr<const sgmv::RidgeObjective> ridge(const sgmv_dataset* ds, double lambda) {
  require(ds != nullptr, "dataset is NULL");
  return std::make_shared<const sgmv::RidgeObjective>(ds->data, lambda);
}

sgmv_status emit_dataset(sgmv::Dataset ds, sgmv_dataset** out) {
  *out = new sgmv_dataset{std::make_shared<const sgmv::Dataset>(std::move(ds))};
  return SGMV_OK;
}

struct WarningSink {
  sgmv_warning_fn fn;
  void* user;
};

}  // namespace

extern "C" {

const char* sgmv_version(void) { return "0.1.0"; }

const char* sgmv_status_string(sgmv_status s) {
  switch (s) {
    case SGMV_OK: return "ok";
    case SGMV_E_ARGUMENT: return "invalid argument";
    case SGMV_E_PARSE: return "parse error";
    case SGMV_E_DIMENSION: return "dimension mismatch";
    case SGMV_E_EMPTY_INPUT: return "empty input";
    case SGMV_E_NUMERIC: return "numerical failure";
    case SGMV_E_NOT_DESCENT: return "not a descent direction";
    case SGMV_E_DIVERGED: return "run diverged";
    case SGMV_E_IO: return "i/o error";
    case SGMV_E_RENDER: return "rendering error";
    case SGMV_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* sgmv_last_error(void) { return g_last_error.c_str(); }

void sgmv_set_warning_handler(sgmv_warning_fn fn, void* user) {
  if (!fn) {
    sgmv::set_warning_handler(nullptr);
    return;
  }
  const WarningSink sink{fn, user};
  sgmv::set_warning_handler([sink](std::string_view msg) {
    const std::string text(msg);
    sink.fn(text.c_str(), sink.user);
  });
}

sgmv_status sgmv_dataset_load(const char* path, int64_t expected_dim, sgmv_dataset** out) {
  return guarded([&] {
    require(path && out, "path and out must be non-NULL");
    return emit_dataset(sgmv::load_libsvm(path, dim_hint(expected_dim)), out);
  });
}

sgmv_status sgmv_dataset_parse(const char* text, size_t length, int64_t expected_dim,
                               sgmv_dataset** out) {
  return guarded([&] {
    require((text || length == 0) && out, "text and out must be non-NULL");
    std::istringstream in(std::string(text ? text : "", length));
    return emit_dataset(sgmv::parse_libsvm(in, dim_hint(expected_dim), "memory"), out);
  });
}

sgmv_status sgmv_dataset_from_arrays(int64_t n, int64_t d, const double* features,
                                     const double* targets, const char* name,
                                     sgmv_dataset** out) {
  return guarded([&] {
    require(features && targets && out, "features, targets and out must be non-NULL");
    require(n >= 1 && d >= 1, "n and d must be >= 1");
    sgmv::RowMatrix X = Eigen::Map<const sgmv::RowMatrix>(features, n, d);
    sgmv::Vector y = Eigen::Map<const sgmv::Vector>(targets, n);
    return emit_dataset(sgmv::Dataset(std::move(X), std::move(y), name ? name : "arrays"), out);
  });
}

sgmv_status sgmv_dataset_synth(int64_t n, int64_t d, double noise_sd, uint64_t seed,
                               sgmv_dataset** out, double* planted_weights) {
  return guarded([&] {
    require(out != nullptr, "out must be non-NULL");
    auto s = sgmv::synth_ridge(n, d, noise_sd, seed);
    if (planted_weights) {
      Eigen::Map<sgmv::Vector>(planted_weights, d) = s.planted_weights;
    }
    return emit_dataset(std::move(s.data), out);
  });
}

sgmv_status sgmv_dataset_scale_maxmin(const sgmv_dataset* ds, sgmv_dataset** out) {
  return guarded([&] {
    require(ds && out, "dataset and out must be non-NULL");
    return emit_dataset(sgmv::maxmin_scale(*ds->data), out);
  });
}

sgmv_status sgmv_dataset_save(const sgmv_dataset* ds, const char* path) {
  return guarded([&] {
    require(ds && path, "dataset and path must be non-NULL");
    sgmv::save_libsvm(path, *ds->data);
    return SGMV_OK;
  });
}

int64_t sgmv_dataset_n(const sgmv_dataset* ds) { return ds ? ds->data->n() : 0; }
int64_t sgmv_dataset_d(const sgmv_dataset* ds) { return ds ? ds->data->d() : 0; }
const char* sgmv_dataset_name(const sgmv_dataset* ds) {
  return ds ? ds->data->name().c_str() : "";
}

sgmv_status sgmv_dataset_get(const sgmv_dataset* ds, double* features, double* targets) {
  return guarded([&] {
    require(ds != nullptr, "dataset is NULL");
    const auto& data = *ds->data;
    if (features) {
      Eigen::Map<sgmv::RowMatrix>(features, data.n(), data.d()) = data.features();
    }
    if (targets) Eigen::Map<sgmv::Vector>(targets, data.n()) = data.targets();
    return SGMV_OK;
  });
}

void sgmv_dataset_free(sgmv_dataset* ds) { delete ds; }

sgmv_status sgmv_ridge_loss(const sgmv_dataset* ds, double lambda, const double* w,
                            double* loss) {
  return guarded([&] {
    require(w && loss, "w and loss must be non-NULL");
    auto obj = ridge(ds, lambda);
    *loss = obj->loss(Eigen::Map<const sgmv::Vector>(w, obj->d()));
    return SGMV_OK;
  });
}

sgmv_status sgmv_ridge_minimizer(const sgmv_dataset* ds, double lambda, double* w_star) {
  return guarded([&] {
    require(w_star != nullptr, "w_star must be non-NULL");
    auto obj = ridge(ds, lambda);
    Eigen::Map<sgmv::Vector>(w_star, obj->d()) = sgmv::exact_minimizer(*obj);
    return SGMV_OK;
  });
}

sgmv_status sgmv_ridge_loss_gap(const sgmv_dataset* ds, double lambda, const double* w,
                                const double* w_star, double* gap) {
  return guarded([&] {
    require(w && w_star && gap, "w, w_star and gap must be non-NULL");
    auto obj = ridge(ds, lambda);
    *gap = obj->loss_gap(Eigen::Map<const sgmv::Vector>(w, obj->d()),
                         Eigen::Map<const sgmv::Vector>(w_star, obj->d()));
    return SGMV_OK;
  });
}

void sgmv_run_config_init(sgmv_run_config* cfg) {
  if (!cfg) return;
  const sgmv::RunConfig r;
  cfg->algorithm = SGMV_ALG1;
  cfg->gamma_mode = SGMV_GAMMA_STAR;
  cfg->batch_size = r.batch_size;
  cfg->full_batch = 0;
  cfg->wolfe = from_wolfe(r.wolfe);
  cfg->gamma_eps = r.gamma_eps;
  cfg->lambda = 1e-3;
  cfg->max_iters = r.max_iters;
  cfg->outer = r.outer;
  cfg->inner = r.inner;
  cfg->option = 1;
  cfg->seed = r.seed;
  cfg->eval_every = r.eval_every;
  cfg->table_refresh_every = r.table_refresh_every;
  cfg->divergence_factor = r.divergence_factor;
}

sgmv_status sgmv_train(const sgmv_dataset* ds, const sgmv_run_config* cfg, const double* w0,
                       sgmv_trace** out) {
  return guarded([&] {
    require(cfg && out, "config and out must be non-NULL");
    *out = nullptr;
    auto obj = ridge(ds, cfg->lambda);
    const sgmv::RunConfig rc = to_run_config(*cfg);
    sgmv::Vector start;
    if (w0) start = Eigen::Map<const sgmv::Vector>(w0, obj->d());
    try {
      *out = new sgmv_trace{sgmv::run(*obj, rc, w0 ? &start : nullptr)};
    } catch (const sgmv::DivergedError& e) {
      *out = new sgmv_trace{e.partial()};
      return fail(SGMV_E_DIVERGED, e.what());
    }
    return SGMV_OK;
  });
}

size_t sgmv_trace_length(const sgmv_trace* t) { return t ? t->trace.records.size() : 0; }

sgmv_status sgmv_trace_record_at(const sgmv_trace* t, size_t i, sgmv_trace_record* out) {
  return guarded([&] {
    require(t && out, "trace and out must be non-NULL");
    require(i < t->trace.records.size(), "record index out of range");
    const auto& r = t->trace.records[i];
    *out = {r.iter,  r.epoch,     r.loss,      r.full_grad_norm, r.alpha,
            r.beta,  r.gamma_min, r.gamma_max, r.fallback_count, r.wall_ms};
    return SGMV_OK;
  });
}

int64_t sgmv_trace_dim(const sgmv_trace* t) { return t ? t->trace.final_w.size() : 0; }

sgmv_status sgmv_trace_final_w(const sgmv_trace* t, double* w) {
  return guarded([&] {
    require(t && w, "trace and w must be non-NULL");
    Eigen::Map<sgmv::Vector>(w, t->trace.final_w.size()) = t->trace.final_w;
    return SGMV_OK;
  });
}

size_t sgmv_trace_epoch_count(const sgmv_trace* t) {
  return t ? t->trace.epoch_loss.size() : 0;
}

sgmv_status sgmv_trace_epoch_loss(const sgmv_trace* t, size_t i, double* loss) {
  return guarded([&] {
    require(t && loss, "trace and loss must be non-NULL");
    require(i < t->trace.epoch_loss.size(), "epoch index out of range");
    *loss = t->trace.epoch_loss[i];
    return SGMV_OK;
  });
}

int64_t sgmv_trace_line_search_failures(const sgmv_trace* t) {
  return t ? t->trace.line_search_failures : 0;
}

int64_t sgmv_trace_direction_resets(const sgmv_trace* t) {
  return t ? t->trace.direction_resets : 0;
}

sgmv_status sgmv_trace_write_csv(const sgmv_trace* t, const char* path) {
  return guarded([&] {
    require(t && path, "trace and path must be non-NULL");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw sgmv::IoError(std::string("cannot write '") + path + "'");
    sgmv::write_trace_csv(f, t->trace);
    if (!f) throw sgmv::IoError(std::string("write failed for '") + path + "'");
    return SGMV_OK;
  });
}

void sgmv_trace_free(sgmv_trace* t) { delete t; }

void sgmv_variance_config_init(sgmv_variance_config* cfg) {
  if (!cfg) return;
  const sgmv::VarianceExperimentConfig v;
  cfg->num_checkpoints = v.num_checkpoints;
  cfg->num_batches = v.num_batches;
  cfg->batch_size = v.batch_size;
  cfg->seed = v.seed;
  cfg->lambda = 1e-3;
  cfg->gamma_eps = v.gamma_eps;
  cfg->wolfe = from_wolfe(v.wolfe);
  cfg->cg_grad_tol = v.cg_grad_tol;
  cfg->force_gamma_one = 0;
}

sgmv_status sgmv_variance_experiment(const sgmv_dataset* ds, const sgmv_variance_config* cfg,
                                     sgmv_variance_row* rows, size_t capacity, size_t* count,
                                     int64_t* target_index, const char* csv_path) {
  return guarded([&] {
    require(cfg && count, "config and count must be non-NULL");
    require(rows || capacity == 0, "rows is NULL with nonzero capacity");
    auto obj = ridge(ds, cfg->lambda);
    sgmv::VarianceExperimentConfig v;
    v.num_checkpoints = cfg->num_checkpoints;
    v.num_batches = cfg->num_batches;
    v.batch_size = cfg->batch_size;
    v.seed = cfg->seed;
    v.gamma_eps = cfg->gamma_eps;
    v.wolfe = to_wolfe(cfg->wolfe);
    v.cg_grad_tol = cfg->cg_grad_tol;
    v.force_gamma_one = cfg->force_gamma_one != 0;
    const auto res = sgmv::variance_experiment(*obj, v);
    *count = res.rows.size();
    if (target_index) *target_index = res.target_index;
    for (size_t i = 0; i < res.rows.size() && i < capacity; ++i) {
      rows[i] = {res.rows[i].k, res.rows[i].var_gamma_star, res.rows[i].var_gamma_one};
    }
    if (csv_path) {
      std::ofstream f(csv_path, std::ios::binary);
      if (!f) throw sgmv::IoError(std::string("cannot write '") + csv_path + "'");
      sgmv::write_variance_csv(f, res);
      const nlohmann::json meta = {
          {"dataset", ds->data->name()},
          {"n", ds->data->n()},
          {"d", ds->data->d()},
          {"lambda", cfg->lambda},
          {"num_checkpoints", v.num_checkpoints},
          {"num_batches", v.num_batches},
          {"batch_size", v.batch_size},
          {"seed", v.seed},
          {"gamma_eps", v.gamma_eps},
          {"checkpoint_generator", "full-batch PRP-FR conjugate gradient from w = 0"},
          {"wolfe", {{"sigma1", v.wolfe.sigma1}, {"sigma2", v.wolfe.sigma2},
                     {"alpha_init", v.wolfe.alpha_init}, {"alpha_max", v.wolfe.alpha_max},
                     {"max_evals", v.wolfe.max_evals}}},
          {"cg_grad_tol", v.cg_grad_tol},
          {"target_index", res.target_index},
          {"truncated", res.truncated},
          {"force_gamma_one", v.force_gamma_one},
          {"variance", "divisor num_batches, summed over coordinates"}};
      std::ofstream m(std::string(csv_path) + ".meta.json", std::ios::binary);
      if (!m) throw sgmv::IoError(std::string("cannot write metadata for '") + csv_path + "'");
      m << meta.dump(2) << '\n';
    }
    return SGMV_OK;
  });
}

sgmv_status sgmv_compare(const sgmv_dataset* const* datasets, size_t n_datasets,
                         const sgmv_variant* variants, size_t n_variants, int64_t iters,
                         const uint64_t* seeds, size_t n_seeds, uint32_t threads,
                         double log10_threshold, sgmv_report** out) {
  return guarded([&] {
    require(datasets && variants && seeds && out, "NULL argument");
    require(n_datasets > 0 && n_variants > 0 && n_seeds > 0, "empty dataset, variant or seed list");
    const double lambda = variants[0].config.lambda;
    std::vector<sgmv::Variant> vs;
    for (size_t i = 0; i < n_variants; ++i) {
      if (variants[i].config.lambda != lambda) {
        throw sgmv::ArgumentError("all variants must share lambda");
      }
      vs.push_back({variants[i].name ? variants[i].name : "variant" + std::to_string(i),
                    to_run_config(variants[i].config)});
    }
    std::vector<sgmv::NamedObjective> objs;
    for (size_t i = 0; i < n_datasets; ++i) {
      objs.push_back({datasets[i] ? datasets[i]->data->name() : "", ridge(datasets[i], lambda)});
    }
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    std::optional<double> threshold;
    if (!std::isnan(log10_threshold)) threshold = log10_threshold;
    *out = new sgmv_report{sgmv::compare_convergence(
        objs, vs, iters, std::vector<uint64_t>(seeds, seeds + n_seeds), threads, threshold)};
    return SGMV_OK;
  });
}

size_t sgmv_report_summary_count(const sgmv_report* r) {
  return r ? r->report.summary.size() : 0;
}

sgmv_status sgmv_report_summary_at(const sgmv_report* r, size_t i, sgmv_summary* out) {
  return guarded([&] {
    require(r && out, "report and out must be non-NULL");
    require(i < r->report.summary.size(), "summary index out of range");
    const auto& s = r->report.summary[i];
    *out = {s.dataset.c_str(), s.variant.c_str(), s.runs, s.failed_runs, s.final_log10_loss,
            s.iters_to_threshold ? static_cast<int64_t>(*s.iters_to_threshold) : -1,
            s.total_wall_ms};
    return SGMV_OK;
  });
}

sgmv_status sgmv_report_write(const sgmv_report* r, const char* dir) {
  return guarded([&] {
    require(r && dir, "report and dir must be non-NULL");
    sgmv::write_report(r->report, dir);
    return SGMV_OK;
  });
}

void sgmv_report_free(sgmv_report* r) { delete r; }

sgmv_status sgmv_svg_lines(const char* const* names, const size_t* offsets, size_t n_series,
                           const double* xs, const double* ys, const char* title,
                           const char* x_label, const char* y_label, int32_t log_y,
                           const char* path) {
  return guarded([&] {
    require(offsets && path, "offsets and path must be non-NULL");
    std::vector<sgmv::Series> series;
    for (size_t s = 0; s < n_series; ++s) {
      require(offsets[s] <= offsets[s + 1], "offsets must be nondecreasing");
      sgmv::Series one{names && names[s] ? names[s] : "series" + std::to_string(s), {}};
      for (size_t j = offsets[s]; j < offsets[s + 1]; ++j) one.points.emplace_back(xs[j], ys[j]);
      series.push_back(std::move(one));
    }
    sgmv::SvgOptions opt;
    if (title) opt.title = title;
    if (x_label) opt.x_label = x_label;
    if (y_label) opt.y_label = y_label;
    opt.log_y = log_y != 0;
    sgmv::emit_svg_lines(series, opt, path);
    return SGMV_OK;
  });
}

}  // extern "C"
