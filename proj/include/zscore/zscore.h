/* C interface to the zScore library. All handles are opaque and owned by the
 * caller; release each with its matching *_free function. Every fallible call
 * returns a zs_status; on failure zs_last_error() describes the problem. */
#ifndef ZSCORE_H
#define ZSCORE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define ZS_API __declspec(dllexport)
#else
#define ZS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum zs_status {
  ZS_OK = 0,
  ZS_INVALID_ARGUMENT = 1,
  ZS_MALFORMED_RECORD = 2,
  ZS_DUPLICATE_EVENT = 3,
  ZS_INVALID_WINDOW = 4,
  ZS_UNKNOWN_FEE_TIER = 5,
  ZS_EMPTY_INPUT = 6,
  ZS_INSUFFICIENT_DATA = 7,
  ZS_SHAPE_MISMATCH = 8,
  ZS_STALE_CACHE = 9,
  ZS_EMPTY_SPLIT = 10,
  ZS_LENGTH_MISMATCH = 11,
  ZS_MISSING_SCORE = 12,
  ZS_EMPTY_REPORT = 13,
  ZS_INVALID_MIX = 14,
  ZS_IO = 15,
  ZS_CONFIG = 16,
  ZS_INTERNAL = 99
} zs_status;

typedef enum zs_role { ZS_ROLE_LP = 0, ZS_ROLE_SWAP = 1 } zs_role;

typedef struct zs_config zs_config;
typedef struct zs_events zs_events;
typedef struct zs_features zs_features;
typedef struct zs_scores zs_scores;
typedef struct zs_dataset zs_dataset;
typedef struct zs_model zs_model;
typedef struct zs_predictions zs_predictions;
typedef struct zs_report zs_report;

typedef struct zs_epoch {
  int epoch;
  double train_mse;
  double val_mse;
  double lr;
} zs_epoch;

typedef void (*zs_epoch_callback)(const zs_epoch* epoch, void* user);

/* Message of the last failure on the calling thread ("" if none). */
ZS_API const char* zs_last_error(void);
ZS_API const char* zs_status_name(zs_status status);
ZS_API const char* zs_version(void);

/* Strings returned through char** are released with zs_string_free. */
ZS_API void zs_string_free(char* s);

/* Run configuration ---------------------------------------------------- */
ZS_API zs_status zs_config_new(zs_config** out);
ZS_API void zs_config_free(zs_config* cfg);
/* Merges a JSON config file or document onto the current values. */
ZS_API zs_status zs_config_apply_file(zs_config* cfg, const char* path);
ZS_API zs_status zs_config_apply_json(zs_config* cfg, const char* json);
ZS_API zs_status zs_config_set_role(zs_config* cfg, zs_role role);
ZS_API zs_status zs_config_get_role(const zs_config* cfg, zs_role* out);
/* Sets the run seed and propagates it to model initialization and training. */
ZS_API zs_status zs_config_set_seed(zs_config* cfg, uint64_t seed);
ZS_API zs_status zs_config_get_seed(const zs_config* cfg, uint64_t* out);
/* Worker threads for training shards; 0 picks the hardware concurrency. */
ZS_API zs_status zs_config_set_threads(zs_config* cfg, unsigned threads);
ZS_API zs_status zs_config_validate(const zs_config* cfg);
ZS_API zs_status zs_config_dump(const zs_config* cfg, char** out_json);

/* Event logs ------------------------------------------------------------ */
ZS_API zs_status zs_events_read(const char* path, zs_events** out);
ZS_API zs_status zs_events_write(const zs_events* events, const char* path);
ZS_API void zs_events_free(zs_events* events);
ZS_API size_t zs_events_count(const zs_events* events);
ZS_API int64_t zs_events_max_ts(const zs_events* events);
/* Number of invariant violations; the first one is reported via zs_last_error. */
ZS_API zs_status zs_events_validate(const zs_events* events, size_t* out_violations);

/* Synthetic cohorts ----------------------------------------------------- */
/* mix_path may be NULL for the default archetype mix. */
ZS_API zs_status zs_cohort_generate(size_t n_wallets, const char* mix_path, uint64_t seed, int span_days,
                                    zs_events** out);
ZS_API zs_status zs_cohort_write_manifest(size_t n_wallets, const char* mix_path, uint64_t seed, int span_days,
                                          const char* path);

/* Features -------------------------------------------------------------- */
/* observation_end == 0 uses the latest event timestamp. */
ZS_API zs_status zs_features_extract(const zs_events* events, const zs_config* cfg, int64_t observation_end,
                                     zs_features** out);
ZS_API zs_status zs_features_filter_dusk(const zs_features* features, zs_features** out_kept,
                                         size_t* out_dropped);
ZS_API zs_status zs_features_read(const char* path, zs_role role, zs_features** out);
ZS_API zs_status zs_features_write(const zs_features* features, const char* path);
/* Writes the wallets removed by the last zs_features_filter_dusk that produced `kept`. */
ZS_API zs_status zs_features_write_dropped(const zs_features* kept, const char* path);
/* Keeps only wallets that have a prediction. */
ZS_API zs_status zs_features_select_predicted(const zs_features* features, const zs_predictions* predictions,
                                              zs_features** out);
ZS_API void zs_features_free(zs_features* features);
ZS_API size_t zs_features_count(const zs_features* features);
ZS_API zs_role zs_features_role(const zs_features* features);

/* Blueprint scores ------------------------------------------------------ */
ZS_API zs_status zs_scores_compute(const zs_features* features, const zs_config* cfg, zs_scores** out);
ZS_API zs_status zs_scores_read(const char* path, zs_role role, zs_scores** out);
ZS_API zs_status zs_scores_write(const zs_scores* scores, const char* path);
ZS_API void zs_scores_free(zs_scores* scores);
ZS_API size_t zs_scores_count(const zs_scores* scores);
ZS_API zs_status zs_scores_total(const zs_scores* scores, const char* wallet, double* out);

/* Labeled datasets (noisy labels + wallet-level split) ------------------ */
ZS_API zs_status zs_dataset_build(const zs_features* features, const zs_scores* scores, const zs_config* cfg,
                                  zs_dataset** out);
ZS_API zs_status zs_dataset_write(const zs_dataset* dataset, const char* path);
/* Features of the validation wallets only. */
ZS_API zs_status zs_dataset_val_features(const zs_dataset* dataset, const zs_features* features,
                                         zs_features** out);
ZS_API void zs_dataset_free(zs_dataset* dataset);

/* Models ---------------------------------------------------------------- */
ZS_API zs_status zs_model_train(const zs_dataset* dataset, const zs_config* cfg, zs_epoch_callback on_epoch,
                                void* user, zs_model** out);
ZS_API zs_status zs_model_save(const zs_model* model, const char* manifest_path);
ZS_API zs_status zs_model_load(const char* manifest_path, zs_model** out);
/* Per-epoch history; empty for a loaded model. */
ZS_API zs_status zs_model_write_history(const zs_model* model, const char* path);
ZS_API zs_status zs_model_predict(const zs_model* model, const zs_features* features, zs_predictions** out);
ZS_API double zs_model_val_mse(const zs_model* model);
ZS_API zs_role zs_model_role(const zs_model* model);
ZS_API void zs_model_free(zs_model* model);

/* Predictions ----------------------------------------------------------- */
ZS_API zs_status zs_predictions_read(const char* path, zs_predictions** out);
ZS_API zs_status zs_predictions_write(const zs_predictions* predictions, const char* path);
ZS_API size_t zs_predictions_count(const zs_predictions* predictions);
ZS_API void zs_predictions_free(zs_predictions* predictions);

/* Evaluation ------------------------------------------------------------ */
/* Residuals are taken against the blueprint totals in `targets`. */
ZS_API zs_status zs_report_build(const zs_features* features, const zs_predictions* predictions,
                                 const zs_scores* targets, double tolerance, zs_report** out);
/* Writes report.json, bins.csv and residuals.csv into dir. */
ZS_API zs_status zs_report_emit(const zs_report* report, const char* dir);
ZS_API double zs_report_tol_accuracy(const zs_report* report);
ZS_API size_t zs_report_wallets(const zs_report* report);
ZS_API void zs_report_free(zs_report* report);

/* End-to-end run: every intermediate artifact plus the report lands in out_dir. */
ZS_API zs_status zs_pipeline_run(const zs_events* events, const zs_config* cfg, const char* out_dir,
                                 zs_epoch_callback on_epoch, void* user, zs_report** out_report);

#ifdef __cplusplus
}
#endif

#endif
