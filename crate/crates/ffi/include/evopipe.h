#ifndef EVOPIPE_H
#define EVOPIPE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum EvpStatus {
  EVP_STATUS_OK = 0,
  EVP_STATUS_NULL_ARGUMENT = 1,
  EVP_STATUS_INVALID_ARGUMENT = 2,
  EVP_STATUS_IO = 3,
  EVP_STATUS_PARSE = 4,
  EVP_STATUS_DATASET = 5,
  EVP_STATUS_CONFIG = 6,
  EVP_STATUS_VALIDATION = 7,
  EVP_STATUS_FIT = 8,
  EVP_STATUS_TIMEOUT = 9,
  EVP_STATUS_VERSION = 10,
  EVP_STATUS_INTERNAL = 11,
} EvpStatus;

/**
 * A labelled dataset.
 */
typedef struct EvpDataset EvpDataset;

/**
 * A pipeline fitted on one dataset.
 */
typedef struct EvpFitted EvpFitted;

/**
 * A pipeline tree with its export metadata.
 */
typedef struct EvpPipeline EvpPipeline;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next `evp_*` call on the same thread.
 */
const char *evp_last_error(void);

/**
 * Library version, a static string.
 */
const char *evp_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void evp_string_free(char *s);

/**
 * Loads a named dataset: `hill-valley`, `hill-valley-noisy` (optionally
 * `:ROWSxLENGTH`) or a bundled benchmark such as `breast-cancer-wisconsin`.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum EvpStatus evp_dataset_named(const char *name, struct EvpDataset **out);

/**
 * Loads a CSV file (target column `target`, else the last column) or a
 * PMLB-format `.tsv.gz` file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum EvpStatus evp_dataset_load(const char *path, struct EvpDataset **out);

/**
 * Builds a dataset from a row-major `rows × cols` feature array and labels
 * in `0..n_classes`.
 *
 * # Safety
 * `features` must hold `rows * cols` doubles and `labels` `rows` values.
 */
enum EvpStatus evp_dataset_from_arrays(const double *features,
                                       size_t rows,
                                       size_t cols,
                                       const size_t *labels,
                                       size_t n_classes,
                                       struct EvpDataset **out);

/**
 * Row count; 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live dataset handle.
 */
size_t evp_dataset_rows(const struct EvpDataset *ds);

/**
 * Feature count; 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live dataset handle.
 */
size_t evp_dataset_cols(const struct EvpDataset *ds);

/**
 * # Safety
 * `ds` must be null or a handle not yet freed.
 */
void evp_dataset_free(struct EvpDataset *ds);

/**
 * Parses an exported pipeline artifact.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum EvpStatus evp_pipeline_import(const char *text, struct EvpPipeline **out);

/**
 * The residual-block pipeline: three stacked logistic layers merged with
 * an identity branch under a logistic root, each layer trained full-batch
 * for `epochs` epochs at learning rate `lr`.
 *
 * # Safety
 * `out` must be writable.
 */
enum EvpStatus evp_pipeline_residual_block(int64_t epochs, double lr, struct EvpPipeline **out);

/**
 * Serialises a pipeline with its metadata.
 *
 * # Safety
 * `p` must be a live pipeline handle; `out` must be writable.
 */
enum EvpStatus evp_pipeline_export(const struct EvpPipeline *p, char **out);

/**
 * Operator-node count; 0 for a null handle.
 *
 * # Safety
 * `p` must be null or a live pipeline handle.
 */
size_t evp_pipeline_complexity(const struct EvpPipeline *p);

/**
 * Mean `k`-fold cross-validated accuracy.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum EvpStatus evp_pipeline_cv_score(const struct EvpPipeline *p,
                                     const struct EvpDataset *ds,
                                     size_t k,
                                     uint64_t seed,
                                     double *out);

/**
 * Fits a pipeline on every row of a dataset.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum EvpStatus evp_pipeline_fit(const struct EvpPipeline *p,
                                const struct EvpDataset *ds,
                                uint64_t seed,
                                struct EvpFitted **out);

/**
 * # Safety
 * `p` must be null or a handle not yet freed.
 */
void evp_pipeline_free(struct EvpPipeline *p);

/**
 * Predicts class indices for a row-major `rows × cols` array into
 * `labels_out`, which must have room for `rows` values.
 *
 * # Safety
 * `f` must be live; `features` must hold `rows * cols` doubles.
 */
enum EvpStatus evp_fitted_predict(const struct EvpFitted *f,
                                  const double *features,
                                  size_t rows,
                                  size_t cols,
                                  size_t *labels_out);

/**
 * # Safety
 * `f` must be null or a handle not yet freed.
 */
void evp_fitted_free(struct EvpFitted *f);

/**
 * Runs one experiment. `config_json` uses the result-file `config` schema;
 * omitted fields take their defaults. On success `out_json` receives the
 * result document.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; `out_json` must be writable.
 */
enum EvpStatus evp_run_experiment(const char *config_json, char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EVOPIPE_H */
