/* C interface to the jscc noisy-channel autoencoder library. */

#ifndef JSCC_H
#define JSCC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code returned by every fallible call.
 */
enum JsccStatus
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  /**
   * The call succeeded.
   */
  JsccStatus_Ok = 0,
  /**
   * A required pointer argument was null.
   */
  JsccStatus_NullPointer = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  JsccStatus_Utf8 = 2,
  /**
   * An argument value was rejected (bad shape, range, or combination).
   */
  JsccStatus_InvalidArgument = 3,
  /**
   * A configuration file or override could not be parsed.
   */
  JsccStatus_Config = 4,
  /**
   * A data file was malformed.
   */
  JsccStatus_Data = 5,
  /**
   * A checkpoint file was malformed or incompatible.
   */
  JsccStatus_Checkpoint = 6,
  /**
   * Arithmetic produced non-finite values or training diverged.
   */
  JsccStatus_Numeric = 7,
  /**
   * An operating-system I/O error occurred.
   */
  JsccStatus_Io = 8,
  /**
   * An output buffer was too small; nothing was written.
   */
  JsccStatus_BufferTooSmall = 9,
  /**
   * One or more self-test checks failed.
   */
  JsccStatus_SelftestFailed = 10,
  /**
   * An internal panic was caught at the boundary.
   */
  JsccStatus_Panic = 11,
};
#ifndef __cplusplus
typedef int32_t JsccStatus;
#endif // __cplusplus

/**
 * Synthetic dataset families accepted by [`jscc_dataset_synth`].
 */
enum JsccSynthKind
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  /**
   * Distinct one-hot vectors, cycled to fill the requested count.
   */
  JsccSynthKind_OneHot = 0,
  /**
   * Independent fair coin flips per pixel.
   */
  JsccSynthKind_RandomBinary = 1,
  /**
   * One soft Gaussian bump per image; requires a square pixel count.
   */
  JsccSynthKind_Blob = 2,
};
#ifndef __cplusplus
typedef int32_t JsccSynthKind;
#endif // __cplusplus

/**
 * Opaque dataset handle.
 */
typedef struct JsccDataset JsccDataset;

/**
 * Opaque model handle.
 */
typedef struct JsccModel JsccModel;

/**
 * Opaque training-run report handle.
 */
typedef struct JsccRunReport JsccRunReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Returns the library version as a static NUL-terminated string.
 */
const char *jscc_version(void);

/**
 * Returns the message for the most recent failure on this thread, or an
 * empty string after a success. The pointer stays valid until the next
 * library call on the same thread.
 */
const char *jscc_last_error_message(void);

/**
 * Generates a deterministic synthetic dataset of `n` examples with `d`
 * pixels each and stores a new handle in `*out`.
 *
 * # Safety
 *
 * `out` must be a valid pointer to a `JsccDataset*` slot.
 */
JsccStatus jscc_dataset_synth(JsccSynthKind kind,
                              uintptr_t n,
                              uintptr_t d,
                              uint64_t seed,
                              struct JsccDataset **out);

/**
 * Loads an IDX image file (8-bit pixels, scaled to [0, 1]) and stores a
 * new handle in `*out`.
 *
 * # Safety
 *
 * `images` must be a NUL-terminated path and `out` a valid slot pointer.
 */
JsccStatus jscc_dataset_load_idx(const char *images, struct JsccDataset **out);

/**
 * Returns the number of examples in the dataset, or 0 for a null handle.
 *
 * # Safety
 *
 * `ds`, when non-null, must be a live dataset handle.
 */
uintptr_t jscc_dataset_len(const struct JsccDataset *ds);

/**
 * Returns the number of pixels per example, or 0 for a null handle.
 *
 * # Safety
 *
 * `ds`, when non-null, must be a live dataset handle.
 */
uintptr_t jscc_dataset_dim(const struct JsccDataset *ds);

/**
 * Copies example `index` into `out` (capacity `out_cap` doubles). Needs
 * `out_cap >= jscc_dataset_dim(ds)`.
 *
 * # Safety
 *
 * `ds` must be a live dataset handle and `out` must point to at least
 * `out_cap` writable doubles.
 */
JsccStatus jscc_dataset_row(const struct JsccDataset *ds,
                            uintptr_t index,
                            double *out,
                            uintptr_t out_cap);

/**
 * Frees a dataset handle. Null is ignored.
 *
 * # Safety
 *
 * `ds` must be null or a handle not yet freed.
 */
void jscc_dataset_free(struct JsccDataset *ds);

/**
 * Loads a model checkpoint and stores a new handle in `*out`.
 *
 * # Safety
 *
 * `path` must be a NUL-terminated path and `out` a valid slot pointer.
 */
JsccStatus jscc_model_load(const char *path, struct JsccModel **out);

/**
 * Saves a model to a checkpoint file.
 *
 * # Safety
 *
 * `model` must be a live model handle and `path` a NUL-terminated path.
 */
JsccStatus jscc_model_save(const struct JsccModel *model, const char *path);

/**
 * Returns the model input dimension, or 0 for a null handle.
 *
 * # Safety
 *
 * `model`, when non-null, must be a live model handle.
 */
uintptr_t jscc_model_input_dim(const struct JsccModel *model);

/**
 * Returns the number of code bits, or 0 for a null handle.
 *
 * # Safety
 *
 * `model`, when non-null, must be a live model handle.
 */
uintptr_t jscc_model_code_bits(const struct JsccModel *model);

/**
 * Encodes one example into per-bit code probabilities. `x` holds
 * `x_len == jscc_model_input_dim(model)` pixels; `out` needs capacity
 * `jscc_model_code_bits(model)`.
 *
 * # Safety
 *
 * `model` must be a live handle; `x` must point to `x_len` readable
 * doubles and `out` to `out_cap` writable doubles.
 */
JsccStatus jscc_model_encode(const struct JsccModel *model,
                             const double *x,
                             uintptr_t x_len,
                             double *out,
                             uintptr_t out_cap);

/**
 * Runs one example through the full pipeline — encode, sample a binary
 * code, flip bits with probability `epsilon`, decode — and writes the
 * reconstructed pixel probabilities. The draw is deterministic in `seed`.
 * `out` needs capacity `jscc_model_input_dim(model)`.
 *
 * # Safety
 *
 * Same pointer contracts as [`jscc_model_encode`].
 */
JsccStatus jscc_model_reconstruct(const struct JsccModel *model,
                                  const double *x,
                                  uintptr_t x_len,
                                  double epsilon,
                                  uint64_t seed,
                                  double *out,
                                  uintptr_t out_cap);

/**
 * Frees a model handle. Null is ignored.
 *
 * # Safety
 *
 * `model` must be null or a handle not yet freed.
 */
void jscc_model_free(struct JsccModel *model);

/**
 * Runs a full training experiment from a configuration file: trains,
 * evaluates, writes the run directory (config, metrics CSV, best and
 * final checkpoints, summary), and stores a report handle in `*out`.
 *
 * # Safety
 *
 * `config_path` must be a NUL-terminated path and `out` a valid slot
 * pointer.
 */
JsccStatus jscc_run_experiment(const char *config_path, struct JsccRunReport **out);

/**
 * Returns the run directory path, owned by the report. Null handle gives
 * an empty string.
 *
 * # Safety
 *
 * `report`, when non-null, must be a live report handle; the returned
 * pointer is valid until the report is freed.
 */
const char *jscc_run_report_dir(const struct JsccRunReport *report);

/**
 * Returns the canonical config path written into the run directory.
 *
 * # Safety
 *
 * Same contract as [`jscc_run_report_dir`].
 */
const char *jscc_run_report_config(const struct JsccRunReport *report);

/**
 * Returns the metrics CSV path.
 *
 * # Safety
 *
 * Same contract as [`jscc_run_report_dir`].
 */
const char *jscc_run_report_metrics(const struct JsccRunReport *report);

/**
 * Returns the best-validation checkpoint path.
 *
 * # Safety
 *
 * Same contract as [`jscc_run_report_dir`].
 */
const char *jscc_run_report_best_checkpoint(const struct JsccRunReport *report);

/**
 * Returns the final-epoch checkpoint path.
 *
 * # Safety
 *
 * Same contract as [`jscc_run_report_dir`].
 */
const char *jscc_run_report_final_checkpoint(const struct JsccRunReport *report);

/**
 * Returns the human-readable summary path.
 *
 * # Safety
 *
 * Same contract as [`jscc_run_report_dir`].
 */
const char *jscc_run_report_summary(const struct JsccRunReport *report);

/**
 * Returns the held-out MSE of the best model, or NaN for a null handle.
 *
 * # Safety
 *
 * `report`, when non-null, must be a live report handle.
 */
double jscc_run_report_test_mse(const struct JsccRunReport *report);

/**
 * Returns the number of epochs actually run, or 0 for a null handle.
 *
 * # Safety
 *
 * `report`, when non-null, must be a live report handle.
 */
uintptr_t jscc_run_report_epochs_run(const struct JsccRunReport *report);

/**
 * Returns the 1-based epoch with the best validation MSE, or 0 for a
 * null handle.
 *
 * # Safety
 *
 * `report`, when non-null, must be a live report handle.
 */
uintptr_t jscc_run_report_best_epoch(const struct JsccRunReport *report);

/**
 * Returns the best validation MSE, or NaN for a null handle.
 *
 * # Safety
 *
 * `report`, when non-null, must be a live report handle.
 */
double jscc_run_report_best_valid_mse(const struct JsccRunReport *report);

/**
 * Frees a run-report handle. Null is ignored.
 *
 * # Safety
 *
 * `report` must be null or a handle not yet freed.
 */
void jscc_run_report_free(struct JsccRunReport *report);

/**
 * Estimates mean reconstruction MSE of `model` over `ds` at noise level
 * `epsilon`, averaging `draws` independent transmissions per example with
 * a deterministic stream seeded by `seed`. Writes the result to `*out`.
 *
 * # Safety
 *
 * `model` and `ds` must be live handles; `out` must point to a writable
 * double.
 */
JsccStatus jscc_evaluate(const struct JsccModel *model,
                         const struct JsccDataset *ds,
                         double epsilon,
                         uintptr_t draws,
                         uint64_t seed,
                         double *out);

/**
 * Runs the built-in self-test battery. Returns `Ok` when every check
 * passes; otherwise `SelftestFailed` with the failing checks listed in
 * the thread error message.
 */
JsccStatus jscc_selftest(uint64_t seed);

/**
 * Writes the binary entropy of `p` in bits to `*out`.
 *
 * # Safety
 *
 * `out` must point to a writable double.
 */
JsccStatus jscc_binary_entropy(double p, double *out);

/**
 * Writes to `*out` the channel uses a capacity-achieving separate design
 * needs to move `source_bits` bits across a channel with flip probability
 * `epsilon`.
 *
 * # Safety
 *
 * `out` must point to a writable double.
 */
JsccStatus jscc_sscc_bits(double source_bits, double epsilon, double *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* JSCC_H */
