#ifndef GAITSVM_H
#define GAITSVM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define GAITSVM_N_FEATURES 5

#define GAITSVM_N_PHASES 7

/**
 * Label written for samples outside the first-to-last peak span.
 */
#define GAITSVM_UNLABELED -1

typedef enum GaitsvmStatus {
  GAITSVM_STATUS_OK = 0,
  GAITSVM_STATUS_NULL_POINTER = 1,
  GAITSVM_STATUS_INVALID_ARGUMENT = 2,
  GAITSVM_STATUS_IO = 3,
  GAITSVM_STATUS_FORMAT_VERSION_MISMATCH = 4,
  GAITSVM_STATUS_CORRUPT_MODEL = 5,
  GAITSVM_STATUS_LABELING = 6,
  GAITSVM_STATUS_TRAINING = 7,
  GAITSVM_STATUS_NO_CONVERGENCE = 8,
  GAITSVM_STATUS_EVALUATION = 9,
  GAITSVM_STATUS_PANIC = 10,
} GaitsvmStatus;

/**
 * Opaque trained one-vs-one model.
 */
typedef struct GaitsvmModel GaitsvmModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next gaitsvm call on this thread.
 */
const char *gaitsvm_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gaitsvm_version(void);

/**
 * Static name of phase `index`, or null when `index >= GAITSVM_N_PHASES`.
 */
const char *gaitsvm_phase_name(uint8_t index);

/**
 * Load a model file into `*out`.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum GaitsvmStatus gaitsvm_model_load(const char *path, struct GaitsvmModel **out);

/**
 * Write `model` to `path`.
 *
 * # Safety
 * `model` must come from this library; `path` must be NUL-terminated.
 */
enum GaitsvmStatus gaitsvm_model_save(const struct GaitsvmModel *model, const char *path);

/**
 * Release a model. Null is ignored.
 *
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void gaitsvm_model_free(struct GaitsvmModel *model);

/**
 * Train on `n_rows` rows of `features` (row-major, 5 per row) with phase
 * indices `phases`. `gamma <= 0` selects the default 8/5. Fails with
 * `NoConvergence` unless `allow_nonconverged` is nonzero.
 *
 * # Safety
 * `features` must hold `5 * n_rows` doubles, `phases` `n_rows` bytes and
 * `out` must be valid.
 */
enum GaitsvmStatus gaitsvm_model_train(const double *features,
                                       const uint8_t *phases,
                                       size_t n_rows,
                                       double c,
                                       double gamma,
                                       int32_t allow_nonconverged,
                                       struct GaitsvmModel **out);

/**
 * Predict `n_rows` rows. Writes one phase index per row to `out_phases`
 * and, when `out_scores` is not null, 7 per-class scores per row.
 *
 * # Safety
 * `features` must hold `5 * n_rows` doubles, `out_phases` `n_rows` bytes
 * and `out_scores` (if not null) `7 * n_rows` doubles.
 */
enum GaitsvmStatus gaitsvm_model_predict(const struct GaitsvmModel *model,
                                         const double *features,
                                         size_t n_rows,
                                         uint8_t *out_phases,
                                         double *out_scores);

/**
 * Label a knee-angle series sampled at `sample_rate` Hz with the default
 * peak detector and phase table. Writes a phase index per sample to
 * `out_labels` (`GAITSVM_UNLABELED` outside the first-to-last peak span)
 * and the number of detected peaks to `out_n_peaks` when not null.
 *
 * # Safety
 * `knee` must hold `n` doubles and `out_labels` `n` bytes.
 */
enum GaitsvmStatus gaitsvm_label_knee(const double *knee,
                                      size_t n,
                                      double sample_rate,
                                      int8_t *out_labels,
                                      size_t *out_n_peaks);

/**
 * Per-class PPV and TPR of a 7x7 confusion matrix (row-major, rows = true
 * phase). Undefined rates (empty column or row) are written as NaN.
 *
 * # Safety
 * `counts` must hold 49 values; `out_ppv` and `out_tpr` 7 doubles each.
 */
enum GaitsvmStatus gaitsvm_confusion_rates(const uint64_t *counts,
                                           double *out_ppv,
                                           double *out_tpr);

/**
 * Area under the ROC curve of `scores` against `positive` (nonzero = positive).
 *
 * # Safety
 * `positive` and `scores` must hold `n` values; `out_auc` must be valid.
 */
enum GaitsvmStatus gaitsvm_roc_auc(const uint8_t *positive,
                                   const double *scores,
                                   size_t n,
                                   double *out_auc);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAITSVM_H */
