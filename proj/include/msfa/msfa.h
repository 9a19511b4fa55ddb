/* C interface to the MSFA monitoring library.
 *
 * All objects are opaque handles created by msfa_* functions and released by
 * the matching *_free function. Functions return an msfa_status; on failure
 * msfa_last_error() describes the problem for the calling thread. Strings
 * returned through char** out-parameters are released with msfa_string_free.
 */
#ifndef MSFA_H
#define MSFA_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(MSFA_BUILDING)
#    define MSFA_API __declspec(dllexport)
#  else
#    define MSFA_API __declspec(dllimport)
#  endif
#else
#  define MSFA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum msfa_status {
  MSFA_OK = 0,
  MSFA_REJECTED = 1, /* a model was produced but no pattern count passed validation */
  MSFA_ERR_INPUT = 2,
  MSFA_ERR_NUMERIC = 3,
  MSFA_ERR_MODEL_CORRUPT = 4,
  MSFA_ERR_MODEL_VERSION = 5,
  MSFA_ERR_MODEL_CHECKSUM = 6,
  MSFA_ERR_INTERNAL = 7
} msfa_status;

typedef enum msfa_health {
  MSFA_NORMAL = 0,
  MSFA_NORMAL_SWITCHING = 1,
  MSFA_NEW_PATTERN = 2,
  MSFA_DEGRADATION = 3,
  MSFA_FAULT = 4
} msfa_health;

typedef struct msfa_config msfa_config;
typedef struct msfa_frame msfa_frame;
typedef struct msfa_dataset msfa_dataset;
typedef struct msfa_clustering msfa_clustering;
typedef struct msfa_model msfa_model;
typedef struct msfa_results msfa_results;
typedef struct msfa_dpca msfa_dpca;

MSFA_API const char* msfa_version(void);
MSFA_API const char* msfa_last_error(void);
MSFA_API void msfa_string_free(char* s);
MSFA_API const char* msfa_health_name(int health);

/* Configuration: JSON document with "train", "simulate", "dpca" sections.
 * Keys can be overridden as dotted paths, e.g. ("train.lag", "5"); values
 * are parsed as JSON and fall back to plain strings. */
MSFA_API msfa_status msfa_config_create(msfa_config** out);
MSFA_API msfa_status msfa_config_load(const char* path, msfa_config** out);
MSFA_API msfa_status msfa_config_set(msfa_config* config, const char* key, const char* value);
MSFA_API msfa_status msfa_config_json(const msfa_config* config, char** out);
MSFA_API void msfa_config_free(msfa_config* config);

/* Time-series frames. */
MSFA_API msfa_status msfa_frame_create(const int64_t* timestamps, const double* values, size_t rows,
                                       size_t channels, const char* const* names, msfa_frame** out);
MSFA_API msfa_status msfa_frame_read_csv(const char* path, msfa_frame** out);
MSFA_API msfa_status msfa_frame_write_csv(const msfa_frame* frame, const char* path);
MSFA_API msfa_status msfa_frame_slice(const msfa_frame* frame, size_t begin, size_t end, msfa_frame** out);
/* Index of the first row at or after t (rows() when none). */
MSFA_API size_t msfa_frame_find_time(const msfa_frame* frame, int64_t t);
MSFA_API size_t msfa_frame_rows(const msfa_frame* frame);
MSFA_API size_t msfa_frame_channels(const msfa_frame* frame);
MSFA_API int64_t msfa_frame_timestamp(const msfa_frame* frame, size_t row);
MSFA_API double msfa_frame_value(const msfa_frame* frame, size_t row, size_t channel);
MSFA_API void msfa_frame_free(msfa_frame* frame);

/* Epoch seconds or ISO-8601. */
MSFA_API msfa_status msfa_parse_timestamp(const char* text, int64_t* out);

MSFA_API msfa_status msfa_select_lag(const msfa_frame* frame, double band, size_t max_lag, size_t* lag,
                                     int* band_never_reached);

/* Simulator. `preset` may be NULL when the config has a "simulate" section;
 * `seed` may be NULL to keep the preset/config seed. */
MSFA_API msfa_status msfa_simulate(const char* preset, const msfa_config* config, const uint64_t* seed,
                                   msfa_dataset** out);
MSFA_API msfa_status msfa_dataset_frame(const msfa_dataset* data, msfa_frame** out);
MSFA_API msfa_status msfa_dataset_write(const msfa_dataset* data, const char* data_path, const char* truth_path);
MSFA_API size_t msfa_dataset_rows(const msfa_dataset* data);
MSFA_API int msfa_dataset_label(const msfa_dataset* data, size_t row);
MSFA_API int msfa_dataset_health(const msfa_dataset* data, size_t row);
MSFA_API void msfa_dataset_free(msfa_dataset* data);

/* Temporal pattern clustering on the augmented matrix. */
MSFA_API msfa_status msfa_cluster(const msfa_frame* frame, size_t lag, size_t components, size_t smooth_window,
                                  const msfa_config* config, msfa_clustering** out);
MSFA_API size_t msfa_clustering_rows(const msfa_clustering* c);
MSFA_API int64_t msfa_clustering_timestamp(const msfa_clustering* c, size_t row);
MSFA_API int msfa_clustering_label(const msfa_clustering* c, size_t row);
MSFA_API msfa_status msfa_clustering_write_csv(const msfa_clustering* c, const char* path);
MSFA_API msfa_status msfa_clustering_summary(const msfa_clustering* c, char** json);
MSFA_API void msfa_clustering_free(msfa_clustering* c);

/* Training. `valid` may be NULL to hold out the trailing validation fraction
 * of `train`. Returns MSFA_REJECTED (with a model) when no pattern count
 * passed validation. `report` (optional) receives a JSON summary. */
MSFA_API msfa_status msfa_train(const msfa_frame* train, const msfa_frame* valid, const msfa_config* config,
                                msfa_model** out, char** report);

MSFA_API msfa_status msfa_model_load(const char* path, msfa_model** out);
MSFA_API msfa_status msfa_model_save(const msfa_model* model, const char* path);
MSFA_API size_t msfa_model_patterns(const msfa_model* model);
MSFA_API size_t msfa_model_lag(const msfa_model* model);
MSFA_API size_t msfa_model_channels(const msfa_model* model);
MSFA_API double msfa_model_alpha(const msfa_model* model);
MSFA_API msfa_status msfa_model_summary(const msfa_model* model, char** json);
MSFA_API void msfa_model_free(msfa_model* model);

/* Adds a pattern learned from `samples`; the input model is unchanged. */
MSFA_API msfa_status msfa_model_update(const msfa_model* model, const msfa_frame* samples, msfa_model** out);

/* Online scoring. */
MSFA_API msfa_status msfa_monitor(const msfa_model* model, const msfa_frame* frame, msfa_results** out);
MSFA_API size_t msfa_results_rows(const msfa_results* r);
MSFA_API msfa_status msfa_results_get(const msfa_results* r, size_t row, int64_t* timestamp, double bip[4],
                                      int* health);
MSFA_API msfa_status msfa_results_write_csv(const msfa_results* r, const char* path);
MSFA_API void msfa_results_free(msfa_results* r);

/* Evaluation of a results CSV. `truth_path` and `onset` are optional. */
MSFA_API msfa_status msfa_evaluate(const char* results_path, const char* truth_path, const int64_t* onset,
                                   double alpha, char** json, char** text);

/* DPCA baseline: trained on `train`, scored on `test`. */
MSFA_API msfa_status msfa_dpca_run(const msfa_frame* train, const msfa_frame* test, size_t lag,
                                   const msfa_config* config, msfa_dpca** out);
MSFA_API size_t msfa_dpca_rows(const msfa_dpca* d);
MSFA_API msfa_status msfa_dpca_get(const msfa_dpca* d, size_t row, int64_t* timestamp, double* t2, double* spe,
                                   int* alarm);
MSFA_API msfa_status msfa_dpca_write_csv(const msfa_dpca* d, const char* path);
MSFA_API msfa_status msfa_dpca_report(const msfa_dpca* d, const int64_t* onset, char** json);
MSFA_API void msfa_dpca_free(msfa_dpca* d);

#ifdef __cplusplus
}
#endif

#endif /* MSFA_H */
