/* C interface to the sgmv library. All functions are thread-safe on
 * distinct handles; handles are immutable after creation. Functions that
 * can fail return an sgmv_status and leave a message in sgmv_last_error(),
 * which is per-thread. */
#ifndef SGMV_H
#define SGMV_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(SGMV_BUILDING_LIBRARY)
#define SGMV_API __attribute__((visibility("default")))
#else
#define SGMV_API
#endif

typedef enum sgmv_status {
  SGMV_OK = 0,
  SGMV_E_ARGUMENT = 1,
  SGMV_E_PARSE = 2,
  SGMV_E_DIMENSION = 3,
  SGMV_E_EMPTY_INPUT = 4,
  SGMV_E_NUMERIC = 5,
  SGMV_E_NOT_DESCENT = 6,
  SGMV_E_DIVERGED = 7,
  SGMV_E_IO = 8,
  SGMV_E_RENDER = 9,
  SGMV_E_INTERNAL = 100
} sgmv_status;

typedef struct sgmv_dataset sgmv_dataset;
typedef struct sgmv_trace sgmv_trace;
typedef struct sgmv_report sgmv_report;

SGMV_API const char* sgmv_version(void);
SGMV_API const char* sgmv_status_string(sgmv_status status);
/* Message of the last failed call on this thread ("" if none). */
SGMV_API const char* sgmv_last_error(void);

/* NULL restores the default handler, which prints to stderr. */
typedef void (*sgmv_warning_fn)(const char* message, void* user);
SGMV_API void sgmv_set_warning_handler(sgmv_warning_fn fn, void* user);

/* ---- datasets ---- */

/* expected_dim <= 0 infers d from the largest index. */
SGMV_API sgmv_status sgmv_dataset_load(const char* path, int64_t expected_dim,
                                       sgmv_dataset** out);
SGMV_API sgmv_status sgmv_dataset_parse(const char* text, size_t length,
                                        int64_t expected_dim, sgmv_dataset** out);
/* features: n*d row-major. */
SGMV_API sgmv_status sgmv_dataset_from_arrays(int64_t n, int64_t d,
                                              const double* features,
                                              const double* targets,
                                              const char* name, sgmv_dataset** out);
/* planted_weights may be NULL, else receives d values. */
SGMV_API sgmv_status sgmv_dataset_synth(int64_t n, int64_t d, double noise_sd,
                                        uint64_t seed, sgmv_dataset** out,
                                        double* planted_weights);
SGMV_API sgmv_status sgmv_dataset_scale_maxmin(const sgmv_dataset* ds,
                                               sgmv_dataset** out);
SGMV_API sgmv_status sgmv_dataset_save(const sgmv_dataset* ds, const char* path);
SGMV_API int64_t sgmv_dataset_n(const sgmv_dataset* ds);
SGMV_API int64_t sgmv_dataset_d(const sgmv_dataset* ds);
SGMV_API const char* sgmv_dataset_name(const sgmv_dataset* ds);
/* Copies features (n*d row-major) and/or targets (n); either may be NULL. */
SGMV_API sgmv_status sgmv_dataset_get(const sgmv_dataset* ds, double* features,
                                      double* targets);
SGMV_API void sgmv_dataset_free(sgmv_dataset* ds);

/* ---- ridge objective ---- */

SGMV_API sgmv_status sgmv_ridge_loss(const sgmv_dataset* ds, double lambda,
                                     const double* w, double* loss);
SGMV_API sgmv_status sgmv_ridge_minimizer(const sgmv_dataset* ds, double lambda,
                                          double* w_star);
/* f(w) - f(w_star) computed without cancellation. */
SGMV_API sgmv_status sgmv_ridge_loss_gap(const sgmv_dataset* ds, double lambda,
                                         const double* w, const double* w_star,
                                         double* gap);

/* ---- training ---- */

typedef enum sgmv_algorithm { SGMV_ALG1 = 1, SGMV_ALG2 = 2 } sgmv_algorithm;
typedef enum sgmv_gamma_mode { SGMV_GAMMA_STAR = 0, SGMV_GAMMA_ONE = 1 } sgmv_gamma_mode;

typedef struct sgmv_wolfe {
  double sigma1;
  double sigma2;
  double alpha_init;
  double alpha_min;
  double alpha_max;
  int32_t max_evals;
} sgmv_wolfe;

typedef struct sgmv_run_config {
  int32_t algorithm;  /* sgmv_algorithm */
  int32_t gamma_mode; /* sgmv_gamma_mode */
  int64_t batch_size;
  int32_t full_batch;
  sgmv_wolfe wolfe;
  double gamma_eps;
  double lambda;
  int64_t max_iters; /* alg1 */
  int64_t outer;     /* alg2: T */
  int64_t inner;     /* alg2: m */
  int32_t option;    /* alg2 outer point: 1 = last inner iterate, 2 = random */
  uint64_t seed;
  int64_t eval_every;
  int64_t table_refresh_every;
  double divergence_factor;
} sgmv_run_config;

SGMV_API void sgmv_run_config_init(sgmv_run_config* cfg);

typedef struct sgmv_trace_record {
  int64_t iter;
  int64_t epoch;
  double loss;
  double full_grad_norm;
  double alpha;
  double beta;
  double gamma_min;
  double gamma_max;
  int64_t fallback_count;
  double wall_ms;
} sgmv_trace_record;

/* w0 may be NULL (zero start). On divergence *out still receives the
 * partial trace and SGMV_E_DIVERGED is returned. */
SGMV_API sgmv_status sgmv_train(const sgmv_dataset* ds, const sgmv_run_config* cfg,
                                const double* w0, sgmv_trace** out);
SGMV_API size_t sgmv_trace_length(const sgmv_trace* t);
SGMV_API sgmv_status sgmv_trace_record_at(const sgmv_trace* t, size_t i,
                                          sgmv_trace_record* out);
SGMV_API int64_t sgmv_trace_dim(const sgmv_trace* t);
SGMV_API sgmv_status sgmv_trace_final_w(const sgmv_trace* t, double* w);
SGMV_API size_t sgmv_trace_epoch_count(const sgmv_trace* t);
SGMV_API sgmv_status sgmv_trace_epoch_loss(const sgmv_trace* t, size_t i, double* loss);
SGMV_API int64_t sgmv_trace_line_search_failures(const sgmv_trace* t);
SGMV_API int64_t sgmv_trace_direction_resets(const sgmv_trace* t);
SGMV_API sgmv_status sgmv_trace_write_csv(const sgmv_trace* t, const char* path);
SGMV_API void sgmv_trace_free(sgmv_trace* t);

/* ---- variance experiment ---- */

typedef struct sgmv_variance_config {
  int64_t num_checkpoints;
  int64_t num_batches;
  int64_t batch_size;
  uint64_t seed;
  double lambda;
  double gamma_eps;
  sgmv_wolfe wolfe;
  double cg_grad_tol;
  int32_t force_gamma_one;
} sgmv_variance_config;

typedef struct sgmv_variance_row {
  int64_t k;
  double var_gamma_star;
  double var_gamma_one;
} sgmv_variance_row;

SGMV_API void sgmv_variance_config_init(sgmv_variance_config* cfg);

/* rows receives up to `capacity` rows (num_checkpoints suffices); *count is
 * the number produced. csv_path may be NULL; otherwise the CSV and a
 * <csv_path>.meta.json sidecar are written. target_index may be NULL. */
SGMV_API sgmv_status sgmv_variance_experiment(const sgmv_dataset* ds,
                                              const sgmv_variance_config* cfg,
                                              sgmv_variance_row* rows, size_t capacity,
                                              size_t* count, int64_t* target_index,
                                              const char* csv_path);

/* ---- convergence comparison ---- */

typedef struct sgmv_variant {
  const char* name;
  sgmv_run_config config;
} sgmv_variant;

typedef struct sgmv_summary {
  const char* dataset; /* owned by the report */
  const char* variant;
  int32_t runs;
  int32_t failed_runs;
  double final_log10_loss; /* NaN if every run failed */
  int64_t iters_to_threshold; /* -1 if not reached or no threshold */
  double total_wall_ms;
} sgmv_summary;

/* All variants must share lambda. log10_threshold NaN disables
 * iterations-to-threshold. threads 0 means hardware concurrency. */
SGMV_API sgmv_status sgmv_compare(const sgmv_dataset* const* datasets, size_t n_datasets,
                                  const sgmv_variant* variants, size_t n_variants,
                                  int64_t iters, const uint64_t* seeds, size_t n_seeds,
                                  uint32_t threads, double log10_threshold,
                                  sgmv_report** out);
SGMV_API size_t sgmv_report_summary_count(const sgmv_report* r);
SGMV_API sgmv_status sgmv_report_summary_at(const sgmv_report* r, size_t i,
                                            sgmv_summary* out);
/* Writes curves_<dataset>.csv/.svg and summary.csv into dir. */
SGMV_API sgmv_status sgmv_report_write(const sgmv_report* r, const char* dir);
SGMV_API void sgmv_report_free(sgmv_report* r);

/* ---- plotting ---- */

/* Renders series s from xs[offsets[s]..offsets[s+1]) etc. */
SGMV_API sgmv_status sgmv_svg_lines(const char* const* names, const size_t* offsets,
                                    size_t n_series, const double* xs, const double* ys,
                                    const char* title, const char* x_label,
                                    const char* y_label, int32_t log_y, const char* path);

#ifdef __cplusplus
}
#endif

#endif
