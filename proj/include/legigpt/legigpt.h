/* legigpt.h - C ABI for the legigpt legislative analysis pipeline.
 *
 * The library exposes two opaque handle families:
 *   lg_pipeline  - a configured batch run; executes the pipeline commands
 *                  (ingest, filter, features, train, explain, report)
 *                  against an output directory.
 *   lg_model     - a trained tree-ensemble model loaded from its text
 *                  serialization; supports probability prediction and
 *                  exact per-feature attribution.
 *
 * All functions return lg_status; LG_OK is 0. On failure the per-handle
 * last-error text describes the problem. Creation failures report through
 * lg_last_error(), which is thread-local.
 */
#ifndef LEGIGPT_H
#define LEGIGPT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define LEGIGPT_API __declspec(dllexport)
#else
#define LEGIGPT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lg_status {
    LG_OK = 0,
    LG_ERR_IO = 1,
    LG_ERR_PARSE = 2,
    LG_ERR_INVALID_ARGUMENT = 3,
    LG_ERR_STATE = 4,
    LG_ERR_PROVIDER = 5,
    LG_ERR_INTERNAL = 6
} lg_status;

typedef struct lg_pipeline lg_pipeline;
typedef struct lg_model lg_model;

LEGIGPT_API const char* lg_version(void);
LEGIGPT_API const char* lg_status_name(lg_status status);

/* NaN sentinel marking a missing feature value in prediction rows. */
LEGIGPT_API double lg_missing_value(void);

/* Thread-local error text for calls that have no handle to ask
 * (lg_pipeline_open, lg_model_load). */
LEGIGPT_API const char* lg_last_error(void);

/* ---- pipeline ---------------------------------------------------- */

/* Opens a pipeline over the key-value run-config file. */
LEGIGPT_API lg_status lg_pipeline_open(const char* config_path,
                                       lg_pipeline** out_pipeline);

/* Overrides one dotted config key ("provider.mode", "output.dir",
 * "split.seed", ...). Takes effect for subsequent lg_pipeline_run calls. */
LEGIGPT_API lg_status lg_pipeline_set(lg_pipeline* pipeline, const char* key,
                                      const char* value);

/* Runs one command: "ingest", "filter", "features", "train", "explain",
 * or "report". */
LEGIGPT_API lg_status lg_pipeline_run(lg_pipeline* pipeline, const char* command);

LEGIGPT_API const char* lg_pipeline_last_error(const lg_pipeline* pipeline);
LEGIGPT_API const char* lg_pipeline_output_dir(const lg_pipeline* pipeline);
LEGIGPT_API void lg_pipeline_close(lg_pipeline* pipeline);

/* ---- models ------------------------------------------------------ */

/* Loads a tree-ensemble model from its text serialization. */
LEGIGPT_API lg_status lg_model_load(const char* path, lg_model** out_model);

LEGIGPT_API int32_t lg_model_n_features(const lg_model* model);

/* rows: n_rows x n_features row-major doubles (missing entries =
 * lg_missing_value()). out_proba receives n_rows probabilities of the
 * positive (conservative) class. */
LEGIGPT_API lg_status lg_model_predict_proba(const lg_model* model, const double* rows,
                                             size_t n_rows, size_t n_features,
                                             double* out_proba);

/* Exact per-feature attributions in the model's raw-output units.
 * out_attributions receives n_rows x n_features values; out_base_value
 * (optional) the shared expected-output baseline. For every row,
 * base + sum(attributions) equals the raw model output. */
LEGIGPT_API lg_status lg_model_shap(const lg_model* model, const double* rows,
                                    size_t n_rows, size_t n_features,
                                    double* out_attributions, double* out_base_value);

LEGIGPT_API const char* lg_model_last_error(const lg_model* model);
LEGIGPT_API void lg_model_free(lg_model* model);

#ifdef __cplusplus
}
#endif

#endif /* LEGIGPT_H */
