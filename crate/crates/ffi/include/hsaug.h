#ifndef HSAUG_H
#define HSAUG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Reliability-matrix cell that holds no judgment.
 */
#define HSAUG_MISSING -1

typedef enum hsaug_status {
  HSAUG_STATUS_OK = 0,
  HSAUG_STATUS_NULL_ARGUMENT = 1,
  HSAUG_STATUS_INVALID_UTF8 = 2,
  HSAUG_STATUS_INVALID_INPUT = 3,
  HSAUG_STATUS_IO = 4,
  HSAUG_STATUS_FORMAT = 5,
  HSAUG_STATUS_UNDEFINED = 6,
  HSAUG_STATUS_PANIC = 7,
  HSAUG_STATUS_INTERNAL = 8,
} hsaug_status;

/**
 * Opaque handle to a trained linear classifier.
 */
typedef struct hsaug_model hsaug_model;

/**
 * Outcome of an ASO comparison of sample A against sample B.
 */
typedef struct hsaug_aso_result {
  double epsilon;
  double epsilon_min;
  double bootstrap_std;
  bool degenerate;
  bool highly_significant;
  bool significant;
} hsaug_aso_result;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL after a success.
 * The pointer stays valid until the next call into the library on this thread.
 */
const char *hsaug_last_error_message(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, freed once.
 */
void hsaug_string_free(char *s);

/**
 * Load a model written by the training stage.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum hsaug_status hsaug_model_load(const char *path, struct hsaug_model **out);

/**
 * Score one text. `p_hateful` receives the probability, `hateful` the
 * decision (probability above one half). Either output may be NULL.
 *
 * # Safety
 * `model` must come from [`hsaug_model_load`]; `text` must be NUL-terminated.
 */
enum hsaug_status hsaug_model_predict(const struct hsaug_model *model,
                                      const char *text,
                                      double *p_hateful,
                                      bool *hateful);

/**
 * # Safety
 * `model` must be NULL or come from [`hsaug_model_load`], freed once.
 */
void hsaug_model_free(struct hsaug_model *model);

/**
 * Build a generation prompt.
 *
 * With `n_demonstrations == 0` this is the finetuning prompt; otherwise a
 * few-shot prompt that needs exactly three demonstrations. `target` is a
 * target identity name or NULL for an untargeted prompt.
 *
 * # Safety
 * String arguments must be NUL-terminated; `demonstrations` must hold
 * `n_demonstrations` pointers; `out` must be writable.
 */
enum hsaug_status hsaug_build_prompt(bool hateful,
                                     const char *target,
                                     const char *const *demonstrations,
                                     size_t n_demonstrations,
                                     char **out);

/**
 * Almost Stochastic Order of scores `a` over `b` with bootstrap ε_min.
 * `bootstrap_iters == 0` keeps the default iteration count.
 *
 * # Safety
 * `a` and `b` must hold `n_a` and `n_b` values; `out` must be writable.
 */
enum hsaug_status hsaug_aso(const double *a,
                            size_t n_a,
                            const double *b,
                            size_t n_b,
                            size_t bootstrap_iters,
                            uint64_t seed,
                            struct hsaug_aso_result *out);

/**
 * Nominal Krippendorff's alpha over a row-major `n_units` × `n_coders`
 * reliability matrix. Cells equal to [`HSAUG_MISSING`] are skipped.
 *
 * # Safety
 * `values` must hold `n_units * n_coders` integers; `out` must be writable.
 */
enum hsaug_status hsaug_krippendorff_alpha(const int32_t *values,
                                           size_t n_units,
                                           size_t n_coders,
                                           double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HSAUG_H */
