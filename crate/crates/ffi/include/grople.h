#ifndef GROPLE_H
#define GROPLE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GropleStatus {
  GROPLE_STATUS_OK = 0,
  GROPLE_STATUS_NULL_POINTER = 1,
  GROPLE_STATUS_INVALID_ARGUMENT = 2,
  GROPLE_STATUS_PARSE = 3,
  GROPLE_STATUS_IO = 4,
  GROPLE_STATUS_DIMENSION = 5,
  GROPLE_STATUS_NUMERICAL = 6,
  GROPLE_STATUS_INVALID_MODEL = 7,
  GROPLE_STATUS_PANIC = 8,
} GropleStatus;

/**
 * Opaque dataset handle.
 */
typedef struct GropleDataset GropleDataset;

/**
 * Opaque fitted-model handle.
 */
typedef struct GropleModel GropleModel;

/**
 * The scalar hyperparameters of a GroPLE fit; solver settings keep their
 * library defaults.
 */
typedef struct GropleHyperparameters {
  size_t latent_dim;
  size_t n_groups;
  double lambda1;
  double lambda2;
  double alpha;
  double beta;
  uint64_t seed;
  bool standardize;
  bool bias;
} GropleHyperparameters;

typedef struct GropleMetrics {
  double accuracy;
  double example_f1;
  double macro_f1;
  double micro_f1;
} GropleMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *grople_version(void);

/**
 * Message of the last failing call on this thread, or NULL. The pointer is
 * valid until the next failing call on this thread.
 */
const char *grople_last_error_message(void);

/**
 * Loads a MULAN ARFF + XML pair.
 *
 * # Safety
 * `arff` and `xml` must be NUL-terminated strings; `out` must be writable.
 */
enum GropleStatus grople_dataset_load(const char *arff,
                                      const char *xml,
                                      struct GropleDataset **out);

/**
 * Builds a dataset from row-major `x` (n x d) and `y` (n x l, entries -1/+1).
 * Features are named `x0..`, labels `y0..`.
 *
 * # Safety
 * `x` must hold `n * d` doubles, `y` `n * l` doubles; `out` must be writable.
 */
enum GropleStatus grople_dataset_from_arrays(const double *x,
                                             const double *y,
                                             size_t n,
                                             size_t d,
                                             size_t l,
                                             struct GropleDataset **out);

/**
 * Writes the instance, feature and label counts.
 *
 * # Safety
 * `dataset` must come from this library; the out pointers must be writable.
 */
enum GropleStatus grople_dataset_shape(const struct GropleDataset *dataset,
                                       size_t *n,
                                       size_t *d,
                                       size_t *l);

/**
 * # Safety
 * `dataset` must come from this library and not be used afterwards.
 */
void grople_dataset_free(struct GropleDataset *dataset);

/**
 * The library's default hyperparameters.
 */
struct GropleHyperparameters grople_hyperparameters_default(void);

/**
 * Fits a GroPLE model.
 *
 * # Safety
 * `dataset` must come from this library; `hp` and `out` must be valid.
 */
enum GropleStatus grople_fit(const struct GropleDataset *dataset,
                             const struct GropleHyperparameters *hp,
                             struct GropleModel **out);

/**
 * Fits the ridge binary-relevance baseline (`lambda > 0`).
 *
 * # Safety
 * `dataset` must come from this library; `out` must be writable.
 */
enum GropleStatus grople_ridge_fit(const struct GropleDataset *dataset,
                                   double lambda,
                                   struct GropleModel **out);

/**
 * Number of labels the model predicts (0 for a null handle).
 *
 * # Safety
 * `model` must be null or come from this library.
 */
size_t grople_model_n_labels(const struct GropleModel *model);

/**
 * Number of input features the model expects (0 for a null handle).
 *
 * # Safety
 * `model` must be null or come from this library.
 */
size_t grople_model_n_features(const struct GropleModel *model);

/**
 * Writes `n x L` scores `X Z V` (or `X W`) to `out`.
 *
 * # Safety
 * `x` must hold `n * d` doubles and `out` room for `n * L` doubles.
 */
enum GropleStatus grople_score(const struct GropleModel *model,
                               const double *x,
                               size_t n,
                               size_t d,
                               double *out);

/**
 * Writes `n x L` predictions in {-1, +1} to `out`.
 *
 * # Safety
 * `x` must hold `n * d` doubles and `out` room for `n * L` doubles.
 */
enum GropleStatus grople_predict(const struct GropleModel *model,
                                 const double *x,
                                 size_t n,
                                 size_t d,
                                 double *out);

/**
 * Writes the model as JSON.
 *
 * # Safety
 * `model` must come from this library; `path` must be a NUL-terminated string.
 */
enum GropleStatus grople_model_save(const struct GropleModel *model, const char *path);

/**
 * Reads a model written by [`grople_model_save`] or the CLI.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum GropleStatus grople_model_load(const char *path, struct GropleModel **out);

/**
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void grople_model_free(struct GropleModel *model);

/**
 * The four metrics of `y_hat` against `y` (both `n x l`, row-major, -1/+1).
 *
 * # Safety
 * `y` and `y_hat` must hold `n * l` doubles; `out` must be writable.
 */
enum GropleStatus grople_metrics(const double *y,
                                 const double *y_hat,
                                 size_t n,
                                 size_t l,
                                 struct GropleMetrics *out);

/**
 * Nemenyi critical difference `q * sqrt(k (k + 1) / (6 n))`.
 */
double grople_nemenyi_cd(size_t n_methods, size_t n_datasets, double q_alpha);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* GROPLE_H */
