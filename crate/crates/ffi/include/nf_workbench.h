#ifndef NF_WORKBENCH_H
#define NF_WORKBENCH_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum NfwMode {
  NFW_MODE_TST = 0,
  NFW_MODE_TTT = 1,
} NfwMode;

typedef enum NfwStatus {
  NFW_STATUS_OK = 0,
  NFW_STATUS_NULL_POINTER = 1,
  NFW_STATUS_INVALID_UTF8 = 2,
  NFW_STATUS_PARSE_ERROR = 3,
  NFW_STATUS_NOT_A_SENTENCE = 4,
  NFW_STATUS_MODEL_ERROR = 5,
  NFW_STATUS_PANIC = 6,
} NfwStatus;

/**
 * Opaque parsed formula.
 */
typedef struct NfwFormula NfwFormula;

/**
 * Opaque finite natural model.
 */
typedef struct NfwModel NfwModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *nfw_last_error_message(void);

/**
 * Parses `text`. On success `*out` owns a formula to release with
 * `nfw_formula_free`.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a writable pointer.
 */
enum NfwStatus nfw_parse(const char *text, struct NfwFormula **out);

/**
 * # Safety
 * `f` must come from `nfw_parse` and not be freed twice. Null is ignored.
 */
void nfw_formula_free(struct NfwFormula *f);

/**
 * Prints the formula; release the result with `nfw_string_free`.
 * Returns null when `f` is null.
 *
 * # Safety
 * `f` must be null or a live formula handle.
 */
char *nfw_formula_to_string(const struct NfwFormula *f);

/**
 * # Safety
 * `s` must come from this library and not be freed twice. Null is ignored.
 */
void nfw_string_free(char *s);

/**
 * Infers a stratification. `*out` receives a JSON object, either
 * `{"stratified":true,"assignment":{..}}` or
 * `{"stratified":false,"cycle":[..],"offset_sum":n}`.
 *
 * # Safety
 * `f` must be a live formula handle and `out` a writable pointer.
 */
enum NfwStatus nfw_stratify_json(const struct NfwFormula *f, enum NfwMode mode, char **out);

/**
 * Builds the natural model over a base of `base` atoms with `depth` levels.
 *
 * # Safety
 * `out` must be a writable pointer.
 */
enum NfwStatus nfw_model_new(uint64_t base, uintptr_t depth, struct NfwModel **out);

/**
 * Evaluates a typed sentence in the model and writes its truth value.
 *
 * # Safety
 * `m` and `f` must be live handles and `out` a writable pointer.
 */
enum NfwStatus nfw_model_eval(const struct NfwModel *m, const struct NfwFormula *f, bool *out);

/**
 * # Safety
 * `m` must come from `nfw_model_new` and not be freed twice. Null is ignored.
 */
void nfw_model_free(struct NfwModel *m);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NF_WORKBENCH_H */
