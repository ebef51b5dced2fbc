/*
 * lvcx C API.
 *
 * Every function that can fail returns an lvcx_status; on failure the message
 * is available from lvcx_last_error() on the same thread. Objects are opaque
 * handles owned by the caller and released with the matching *_free().
 */
#ifndef LVCX_H
#define LVCX_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(LVCX_BUILDING_LIBRARY)
#    define LVCX_API __declspec(dllexport)
#  else
#    define LVCX_API __declspec(dllimport)
#  endif
#else
#  define LVCX_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lvcx_status {
  LVCX_OK = 0,
  LVCX_ERR_DOMAIN = 1,
  LVCX_ERR_INVALID_ARGUMENT = 2,
  LVCX_ERR_INVALID_MODEL = 3,
  LVCX_ERR_CONFIG = 4,
  LVCX_ERR_DATA = 5,
  LVCX_ERR_DEGENERATE = 6,
  LVCX_ERR_ILL_CONDITIONED = 7,
  LVCX_ERR_INSUFFICIENT_DATA = 8,
  LVCX_ERR_IO = 9,
  LVCX_ERR_NULL_ARGUMENT = 10,
  LVCX_ERR_INTERNAL = 11
} lvcx_status;

typedef enum lvcx_model_kind {
  LVCX_MODEL_MIXING = 0,
  LVCX_MODEL_LOCALVOL = 1,
  LVCX_MODEL_DLOCALVOL = 2
} lvcx_model_kind;

typedef enum lvcx_payoff_kind {
  LVCX_PAYOFF_VARSWAP = 0,
  LVCX_PAYOFF_VARCALL = 1,
  LVCX_PAYOFF_VOLSWAP = 2
} lvcx_payoff_kind;

typedef struct lvcx_model lvcx_model;
typedef struct lvcx_batch lvcx_batch;
typedef struct lvcx_text lvcx_text;

LVCX_API const char* lvcx_version(void);
LVCX_API const char* lvcx_last_error(void);
LVCX_API const char* lvcx_status_name(lvcx_status status);

/* Library-owned text (CSV, reports). */
LVCX_API const char* lvcx_text_data(const lvcx_text* text);
LVCX_API size_t lvcx_text_size(const lvcx_text* text);
LVCX_API void lvcx_text_free(lvcx_text* text);

/* Models: a built-in preset ("toy3"), key-value text, or a file of it. */
LVCX_API lvcx_status lvcx_model_preset(const char* name, lvcx_model** out);
LVCX_API lvcx_status lvcx_model_parse(const char* text, lvcx_model** out);
LVCX_API lvcx_status lvcx_model_load(const char* path, lvcx_model** out);
LVCX_API void lvcx_model_free(lvcx_model* model);
LVCX_API lvcx_status lvcx_model_text(const lvcx_model* model, lvcx_text** out);
LVCX_API uint64_t lvcx_model_fingerprint(const lvcx_model* model);
LVCX_API double lvcx_model_horizon(const lvcx_model* model);
LVCX_API size_t lvcx_model_branch_count(const lvcx_model* model);

/* Pointwise quantities. */
LVCX_API lvcx_status lvcx_cum_variance(const lvcx_model* model, size_t branch, double t, double* out);
LVCX_API lvcx_status lvcx_marginal_cdf(const lvcx_model* model, double t, double x, double* out);
LVCX_API lvcx_status lvcx_sigma_loc_sq(const lvcx_model* model, double t, double x, double* out);
LVCX_API lvcx_status lvcx_sigma_dloc_sq(const lvcx_model* model, double epsilon, double t, double x,
                                        double a, double* out);
LVCX_API lvcx_status lvcx_call_price(const lvcx_model* model, double maturity, double strike,
                                     double* out);
/* h_t <= 0 or rel_h_k <= 0 select the defaults (1e-4). */
LVCX_API lvcx_status lvcx_dupire_sigma_sq(const lvcx_model* model, double maturity, double strike,
                                          double h_t, double rel_h_k, double* out);
LVCX_API lvcx_status lvcx_bound_constant(double epsilon, double horizon, double* out);

/* Local-vol surface table, CSV "t,x,sigma2_loc". */
typedef struct lvcx_range {
  double lo;
  double hi;
  size_t count;
} lvcx_range;

LVCX_API lvcx_status lvcx_surface_csv(const lvcx_model* model, const lvcx_range* t,
                                      const lvcx_range* x, unsigned workers, lvcx_text** out);

/* Simulation. */
typedef struct lvcx_sim_config {
  lvcx_model_kind kind;
  size_t steps_per_unit;
  size_t n_paths;
  uint64_t seed;
  double epsilon; /* dlocalvol only */
  unsigned workers;
} lvcx_sim_config;

LVCX_API lvcx_status lvcx_simulate(const lvcx_model* model, const lvcx_sim_config* config,
                                   lvcx_batch** out);
LVCX_API void lvcx_batch_free(lvcx_batch* batch);
LVCX_API size_t lvcx_batch_size(const lvcx_batch* batch);
/* Views into the batch, valid until lvcx_batch_free. */
LVCX_API lvcx_status lvcx_batch_realized_variance(const lvcx_batch* batch, const double** data,
                                                  size_t* n);
LVCX_API lvcx_status lvcx_batch_terminal_x(const lvcx_batch* batch, const double** data, size_t* n);
LVCX_API lvcx_status lvcx_batch_terminal_a(const lvcx_batch* batch, const double** data, size_t* n);
/* One "path_index,X_T,V_T[,a_T]" record per path after '#' header lines. */
LVCX_API lvcx_status lvcx_batch_records(const lvcx_batch* batch, lvcx_text** out);

/* Monte Carlo estimation. */
typedef struct lvcx_estimate {
  double mean;
  double std_error;
  size_t n;
  double ci_lo; /* 99% */
  double ci_hi;
} lvcx_estimate;

LVCX_API lvcx_status lvcx_estimate_payoff(const double* samples, size_t n, lvcx_payoff_kind payoff,
                                          double strike, lvcx_estimate* out);
LVCX_API lvcx_status lvcx_estimate_record(lvcx_payoff_kind payoff, double strike,
                                          const lvcx_estimate* estimate, lvcx_text** out);
LVCX_API lvcx_status lvcx_histogram_csv(const double* samples, size_t n, size_t n_bins, double lo,
                                        double hi, lvcx_text** out);
/* One-sample KS distance of `samples` against the model's law of X_t. */
LVCX_API lvcx_status lvcx_ks_marginal(const lvcx_model* model, double t, const double* samples,
                                      size_t n, double* statistic, double* critical_1pct);

/* Corridor lower bound on realized variance; corridor is a preset name
   ("paper_corridor" or "none"). `report` may be NULL. */
LVCX_API lvcx_status lvcx_corridor_bound(const lvcx_model* model, const char* corridor,
                                         double t_per_unit, double x_per_unit, double* value,
                                         lvcx_text** report);

/* Binned check of the double-local-vol closed form on mixing-model samples. */
typedef struct lvcx_dloc_check_config {
  double epsilon;
  double t;
  size_t n_samples;
  uint64_t seed;
  size_t x_bins;
  size_t a_bins;
  size_t min_count;
  unsigned workers;
} lvcx_dloc_check_config;

LVCX_API lvcx_status lvcx_dloc_check(const lvcx_model* model, const lvcx_dloc_check_config* config,
                                     lvcx_text** csv, size_t* populated, size_t* within_3se);

/* Acceptance self-test. */
typedef struct lvcx_selftest_config {
  uint64_t seed;
  size_t paths; /* 0: the counts each criterion is specified at */
  unsigned workers;
  const int* only; /* criterion ids, or NULL for all */
  size_t only_count;
} lvcx_selftest_config;

typedef void (*lvcx_selftest_callback)(const char* line, int passed, int supplementary, void* user);

LVCX_API size_t lvcx_selftest_count(void);
LVCX_API lvcx_status lvcx_selftest_info(size_t index, int* id, const char** name,
                                        const char** summary);
/* *all_passed is 1 iff every non-supplementary criterion passed. */
LVCX_API lvcx_status lvcx_selftest_run(const lvcx_selftest_config* config,
                                       lvcx_selftest_callback callback, void* user,
                                       int* all_passed);

#ifdef __cplusplus
}
#endif

#endif /* LVCX_H */
