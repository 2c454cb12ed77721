#ifndef SEVKIT_H
#define SEVKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SevkitStatus {
  SEVKIT_STATUS_OK = 0,
  SEVKIT_STATUS_NULL_POINTER = 1,
  SEVKIT_STATUS_INVALID_UTF8 = 2,
  SEVKIT_STATUS_IO = 3,
  SEVKIT_STATUS_PARSE = 4,
  SEVKIT_STATUS_DIMENSION_MISMATCH = 5,
  SEVKIT_STATUS_REFERENCE_NOT_NEGATIVE = 6,
  SEVKIT_STATUS_QUERY_NOT_POSITIVE = 7,
  SEVKIT_STATUS_INVALID_ARGUMENT = 8,
  SEVKIT_STATUS_PANIC = 9,
} SevkitStatus;

typedef enum SevkitKind {
  SEVKIT_KIND_PLUS = 0,
  SEVKIT_KIND_MINUS = 1,
  SEVKIT_KIND_RESTRICTED = 2,
} SevkitKind;

/**
 * A loaded classifier.
 */
typedef struct SevkitModel SevkitModel;

/**
 * A reference point in encoded coordinates.
 */
typedef struct SevkitReference SevkitReference;

/**
 * A feature space (schema, column groups and standardization).
 */
typedef struct SevkitSpace SevkitSpace;

/**
 * Outcome of one SEV computation.
 */
typedef struct SevkitSevResult {
  /**
   * SEV value, or -1 when the query is unexplained within the depth limit.
   */
  int64_t value;
  /**
   * Number of minimal explanations found (capped).
   */
  uint64_t n_explanations;
  /**
   * Vertex of the first explanation; bit j set means feature j takes the
   * query's value.
   */
  uint64_t first_mask;
  uint64_t expanded;
  bool depth_limit_hit;
} SevkitSevResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next sevkit call on the same thread.
 */
const char *sevkit_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sevkit_version(void);

/**
 * Loads a model file written by `sevkit train`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SevkitStatus sevkit_model_load(const char *path, struct SevkitModel **out);

/**
 * # Safety
 * `model` must come from [`sevkit_model_load`] and not be used afterwards.
 */
void sevkit_model_free(struct SevkitModel *model);

/**
 * Encoded input width, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t sevkit_model_input_dim(const struct SevkitModel *model);

/**
 * Score in [0, 1] for one encoded row.
 *
 * # Safety
 * `x` must point to `len` doubles; `model` and `out` must be valid.
 */
enum SevkitStatus sevkit_model_score(const struct SevkitModel *model,
                                     const double *x,
                                     size_t len,
                                     double *out);

/**
 * Writes 1 for a positive prediction, 0 otherwise.
 *
 * # Safety
 * As [`sevkit_model_score`].
 */
enum SevkitStatus sevkit_model_predict(const struct SevkitModel *model,
                                       const double *x,
                                       size_t len,
                                       int32_t *out);

/**
 * Loads a `space.json` written by `sevkit prepare`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SevkitStatus sevkit_space_load(const char *path, struct SevkitSpace **out);

/**
 * # Safety
 * `space` must come from [`sevkit_space_load`] and not be used afterwards.
 */
void sevkit_space_free(struct SevkitSpace *space);

/**
 * Number of original features (hypercube dimensions), 0 for null.
 *
 * # Safety
 * `space` must be null or a live handle.
 */
size_t sevkit_space_n_features(const struct SevkitSpace *space);

/**
 * Number of encoded columns, 0 for null.
 *
 * # Safety
 * `space` must be null or a live handle.
 */
size_t sevkit_space_encoded_width(const struct SevkitSpace *space);

/**
 * Loads a `reference.json` written by `sevkit prepare`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SevkitStatus sevkit_reference_load(const char *path, struct SevkitReference **out);

/**
 * # Safety
 * `reference` must come from [`sevkit_reference_load`] and not be used afterwards.
 */
void sevkit_reference_free(struct SevkitReference *reference);

/**
 * Encoded length of the reference, 0 for null.
 *
 * # Safety
 * `reference` must be null or a live handle.
 */
size_t sevkit_reference_len(const struct SevkitReference *reference);

/**
 * SEV of one encoded query against the reference.
 *
 * `restricted` lists original-feature indices pinned to the query (used for
 * `SEVKIT_KIND_RESTRICTED` only). A `depth_limit` of 0 means the default.
 *
 * # Safety
 * All handles must be live; `query` must point to `query_len` doubles,
 * `restricted` to `n_restricted` indices; `out` must be valid.
 */
enum SevkitStatus sevkit_sev_compute(const struct SevkitModel *model,
                                     const struct SevkitSpace *space,
                                     const struct SevkitReference *reference,
                                     const double *query,
                                     size_t query_len,
                                     enum SevkitKind kind,
                                     const size_t *restricted,
                                     size_t n_restricted,
                                     size_t depth_limit,
                                     struct SevkitSevResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEVKIT_H */
