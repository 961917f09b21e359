#ifndef DDTUNE_H
#define DDTUNE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum DdtuneStatus {
  DDTUNE_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  DDTUNE_STATUS_NULL_POINTER = 1,
  /**
   * An argument violates a documented precondition.
   */
  DDTUNE_STATUS_INVALID_INPUT = 2,
  /**
   * JSON or file content did not parse.
   */
  DDTUNE_STATUS_PARSE = 3,
  /**
   * The computation itself failed (I/O, numerics, size guards).
   */
  DDTUNE_STATUS_RUNTIME = 4,
  /**
   * An internal panic was caught.
   */
  DDTUNE_STATUS_PANIC = 5,
} DdtuneStatus;

/**
 * Penalty selector for regularization paths.
 */
typedef enum DdtunePenalty {
  DDTUNE_PENALTY_L1 = 1,
  DDTUNE_PENALTY_L2 = 2,
} DdtunePenalty;

/**
 * Opaque ordered collection of instances.
 */
typedef struct DdtuneBatch DdtuneBatch;

/**
 * Opaque problem instance (clustering, ssl or logreg).
 */
typedef struct DdtuneInstance DdtuneInstance;

/**
 * Opaque approximate regularization path.
 */
typedef struct DdtunePath DdtunePath;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, e.g. `"0.1.0"`. Static; do not free.
 */
const char *ddtune_version(void);

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next library call on the same thread; do not free.
 */
const char *ddtune_last_error_message(void);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a pointer returned by this library and not yet freed.
 */
void ddtune_string_free(char *s);

/**
 * Generates one instance from a generator description such as
 * `{"task": "clustering", "n": 6, "L": 1, "k": 2}`.
 *
 * # Safety
 * `generator_json` must be a valid C string; `out` must be writable.
 */
enum DdtuneStatus ddtune_instance_generate(const char *generator_json,
                                           uint64_t seed,
                                           struct DdtuneInstance **out);

/**
 * Loads an instance from a JSON file.
 *
 * # Safety
 * `path` must be a valid C string; `out` must be writable.
 */
enum DdtuneStatus ddtune_instance_load(const char *path, struct DdtuneInstance **out);

/**
 * Parses an instance from its JSON text.
 *
 * # Safety
 * `json` must be a valid C string; `out` must be writable.
 */
enum DdtuneStatus ddtune_instance_from_json(const char *json, struct DdtuneInstance **out);

/**
 * JSON text of an instance; free with [`ddtune_string_free`].
 *
 * # Safety
 * `inst` must be a live handle; `out` must be writable.
 */
enum DdtuneStatus ddtune_instance_to_json(const struct DdtuneInstance *inst, char **out);

/**
 * # Safety
 * `inst` must be null or a live handle; it is invalid afterwards.
 */
void ddtune_instance_free(struct DdtuneInstance *inst);

struct DdtuneBatch *ddtune_batch_new(void);

/**
 * Appends a copy of `inst`; the caller keeps ownership of `inst`.
 *
 * # Safety
 * Both handles must be live.
 */
enum DdtuneStatus ddtune_batch_push(struct DdtuneBatch *batch, const struct DdtuneInstance *inst);

/**
 * Number of instances; 0 for a null handle.
 *
 * # Safety
 * `batch` must be null or a live handle.
 */
size_t ddtune_batch_len(const struct DdtuneBatch *batch);

/**
 * # Safety
 * `batch` must be null or a live handle; it is invalid afterwards.
 */
void ddtune_batch_free(struct DdtuneBatch *batch);

/**
 * Empirical risk minimization over a batch; `config_json` is a tuning
 * config such as `{"task": "clustering-M1"}`. Writes the full result as JSON.
 *
 * # Safety
 * `batch` must be live, `config_json` a valid C string, `out` writable.
 */
enum DdtuneStatus ddtune_tune_batch(const struct DdtuneBatch *batch,
                                    const char *config_json,
                                    char **out);

/**
 * Pseudo-dimension bound for a cataloged family (`"H1"`, `"H2"`, `"H3"`,
 * `"G"`). `unlabeled` < 0 selects the default.
 *
 * # Safety
 * `family` must be a valid C string; `out` must be writable.
 */
enum DdtuneStatus ddtune_family_bound(const char *family,
                                      uint64_t n,
                                      uint64_t l,
                                      int64_t unlabeled,
                                      double *out);

/**
 * Pfaffian GJ bound; `k_decimal` is the comparison count as a decimal
 * string, since it can exceed 64 bits.
 *
 * # Safety
 * `k_decimal` must be a valid C string; `out` must be writable.
 */
enum DdtuneStatus ddtune_pdim_gj(uint64_t d,
                                 uint64_t q,
                                 uint64_t m,
                                 uint64_t delta,
                                 const char *k_decimal,
                                 double *out);

/**
 * Approximate regularization path for a logreg instance; `penalty` is a
 * [`DdtunePenalty`] value.
 *
 * # Safety
 * `inst` must be live; `out` must be writable.
 */
enum DdtuneStatus ddtune_path_new(const struct DdtuneInstance *inst,
                                  double eps,
                                  double lambda_min,
                                  double lambda_max,
                                  uint32_t penalty,
                                  struct DdtunePath **out);

/**
 * Coefficient count of the path model; 0 for a null handle.
 *
 * # Safety
 * `path` must be null or a live handle.
 */
size_t ddtune_path_dim(const struct DdtunePath *path);

/**
 * Writes the path model at `lambda` into `beta[0..len]`; `len` must equal
 * [`ddtune_path_dim`].
 *
 * # Safety
 * `path` must be live and `beta` must point to `len` writable doubles.
 */
enum DdtuneStatus ddtune_path_eval(const struct DdtunePath *path,
                                   double lambda,
                                   double *beta,
                                   size_t len);

/**
 * # Safety
 * `path` must be null or a live handle; it is invalid afterwards.
 */
void ddtune_path_free(struct DdtunePath *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DDTUNE_H */
