#ifndef TWOSTAGE_TWOSTAGE_H
#define TWOSTAGE_TWOSTAGE_H

/* C interface to the two-stage cascade library. Objects are opaque handles
 * released with the matching *_free call. Every fallible call returns a
 * tws_status; on failure tws_last_error() holds a message for the calling
 * thread. */

#include <stddef.h>
#include <stdint.h>

#if defined(TWS_BUILDING)
#define TWS_API __attribute__((visibility("default")))
#else
#define TWS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tws_status {
  TWS_OK = 0,
  TWS_E_PRECONDITION = 1,
  TWS_E_DOMAIN = 2,
  TWS_E_DATA = 3,
  TWS_E_IO = 4,
  TWS_E_NUMERICAL = 5,
  TWS_E_FIT = 6,
  TWS_E_RUNAWAY = 7,
  TWS_E_INTERNAL = 8
} tws_status;

typedef enum tws_model {
  TWS_MODEL_PROPOSED = 0,
  TWS_MODEL_TIDEH = 1,
  TWS_MODEL_RPP = 2,
  TWS_MODEL_LR = 3
} tws_model;

typedef enum tws_marks {
  TWS_MARKS_CONSTANT = 0, /* every post has `mark_a` followers */
  TWS_MARKS_LOGNORMAL = 1 /* round(exp(N(mark_a, mark_b^2))) */
} tws_marks;

typedef struct tws_cascade tws_cascade;
typedef struct tws_fit tws_fit;
typedef struct tws_forecast tws_forecast;
typedef struct tws_report tws_report;

typedef struct tws_params {
  double a1, tau1, a2, tau2;
  double r, theta0; /* circadian amplitude and phase (hours) */
  double tc;
} tws_params;

typedef struct tws_kernel {
  double c0;    /* per hour */
  double s0;    /* hours */
  double gamma;
} tws_kernel;

TWS_API const char* tws_last_error(void);
TWS_API const char* tws_status_name(tws_status status);
TWS_API const char* tws_version(void);
/* Release a string returned by the library. */
TWS_API void tws_string_free(char* s);

TWS_API void tws_kernel_defaults(tws_kernel* out);
TWS_API tws_status tws_model_parse(const char* name, tws_model* out);
TWS_API const char* tws_model_name(tws_model model);

/* Cascades */
TWS_API tws_status tws_cascade_load(const char* path, tws_cascade** out);
TWS_API void tws_cascade_free(tws_cascade* c);
TWS_API const char* tws_cascade_id(const tws_cascade* c);
TWS_API size_t tws_cascade_event_count(const tws_cascade* c);
TWS_API double tws_cascade_t_max(const tws_cascade* c);
/* Reaction events with time <= t. */
TWS_API size_t tws_cascade_count_until(const tws_cascade* c, double t);
TWS_API size_t tws_cascade_warning_count(const tws_cascade* c);
TWS_API const char* tws_cascade_warning(const tws_cascade* c, size_t i);

/* Simulation */
typedef struct tws_sim_options {
  tws_params truth;
  tws_kernel kernel;
  double t_end;
  int64_t seed_followers;
  tws_marks marks;
  double mark_a, mark_b;
  uint64_t seed;
  size_t count;
  size_t max_events;
  const double* t_obs_grid;
  size_t t_obs_grid_len;
} tws_sim_options;

TWS_API void tws_sim_options_defaults(tws_sim_options* out);
/* Writes `count` cascades and manifest.txt into out_dir. */
TWS_API tws_status tws_simulate_suite(const tws_sim_options* opts, const char* out_dir);
/* One group of `count` cascades per a2 value. */
TWS_API tws_status tws_simulate_sweep(const tws_sim_options* opts, const double* a2_values, size_t n_values,
                                      const char* out_dir);

/* Fitting */
typedef struct tws_fit_options {
  double t_obs;
  double tau_low, tau_high; /* 0 selects the t_obs-scaled default */
  double tc_low, tc_high;   /* 0 selects the t_obs-scaled default */
  int tc_grid_points;
  int restarts;
  double rpp_epsilon;
  tws_kernel kernel;
} tws_fit_options;

TWS_API void tws_fit_options_defaults(tws_fit_options* out, double t_obs);
TWS_API tws_status tws_fit_run(const tws_cascade* c, tws_model model, const tws_fit_options* opts, tws_fit** out);
TWS_API tws_status tws_fit_load(const char* path, tws_fit** out);
TWS_API tws_status tws_fit_save(const tws_fit* f, const char* path);
TWS_API void tws_fit_free(tws_fit* f);
TWS_API tws_model tws_fit_model(const tws_fit* f);
TWS_API void tws_fit_params(const tws_fit* f, tws_params* out);
TWS_API double tws_fit_t_obs(const tws_fit* f);
TWS_API double tws_fit_loglik(const tws_fit* f);
TWS_API double tws_fit_aic(const tws_fit* f);

/* Forecasting */
typedef struct tws_forecast_options {
  double t_max;
  double bin_width;
  double step;              /* Volterra grid step, hours */
  int check_discretization; /* re-solve at step/2 and fail if they disagree */
  int stage2_only_feedback;
  int dp_includes_seed;
} tws_forecast_options;

TWS_API void tws_forecast_options_defaults(tws_forecast_options* out, double t_max);
TWS_API tws_status tws_forecast_run(const tws_cascade* c, const tws_fit* f, const tws_forecast_options* opts,
                                    tws_forecast** out);
TWS_API tws_status tws_forecast_load(const char* path, tws_forecast** out);
TWS_API tws_status tws_forecast_save(const tws_forecast* fc, const char* path);
TWS_API void tws_forecast_free(tws_forecast* fc);
TWS_API size_t tws_forecast_bin_count(const tws_forecast* fc);
TWS_API void tws_forecast_bin(const tws_forecast* fc, size_t i, double* t_end, double* cumulative);
/* CSV with columns t_end,predicted,actual (actual from the cascade; empty past t_max). */
TWS_API tws_status tws_forecast_series_csv(const tws_forecast* fc, const tws_cascade* c, char** out);

/* Evaluation */
typedef struct tws_eval_options {
  const tws_model* models;
  size_t n_models;
  double split;
  size_t min_posts;
  double min_t_max;
  double bin_width;
  int recovery; /* parameter recovery over a synthetic manifest instead of the benchmark */
  int jobs;
  int dp_includes_seed;
  tws_fit_options fit; /* t_obs and scaled bounds are reset per cascade */
} tws_eval_options;

TWS_API void tws_eval_options_defaults(tws_eval_options* out);
TWS_API tws_status tws_evaluate(const char* manifest_path, const tws_eval_options* opts, tws_report** out);
TWS_API tws_status tws_report_load(const char* path, tws_report** out);
TWS_API tws_status tws_report_save(const tws_report* r, const char* path);
TWS_API void tws_report_free(tws_report* r);
/* Human-readable summary. */
TWS_API tws_status tws_report_summary(const tws_report* r, char** out);
/* Writes table.csv, recovery.csv and overlays.csv into out_dir. */
TWS_API tws_status tws_report_write_series(const tws_report* r, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif
