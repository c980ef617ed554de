#ifndef LGDIM_H
#define LGDIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LgdStatus {
  LGD_STATUS_OK = 0,
  LGD_STATUS_NULL_POINTER = 1,
  LGD_STATUS_INVALID_UTF8 = 2,
  LGD_STATUS_PARSE = 3,
  LGD_STATUS_VALIDATION = 4,
  LGD_STATUS_DOMAIN = 5,
  LGD_STATUS_CAP_EXCEEDED = 6,
  LGD_STATUS_INTERNAL = 7,
} LgdStatus;

/**
 * Opaque validated family of schemes.
 */
typedef struct LgdFamily LgdFamily;

/**
 * Opaque validated scheme.
 */
typedef struct LgdScheme LgdScheme;

typedef struct LgdOptions {
  uint32_t restarts;
  uint32_t max_iters;
  uint64_t seed;
  double tol_obj;
  double tol_grad;
  size_t alphabet_cap;
} LgdOptions;

typedef struct LgdDimension {
  double value;
  bool converged;
  uint32_t iterations;
  double gradient_norm;
} LgdDimension;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or an empty string.
 * The pointer stays valid until the next call into the library on the same
 * thread.
 */
const char *lgd_last_error_message(void);

/**
 * Parses and validates a scheme from JSON.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum LgdStatus lgd_scheme_from_json(const char *json, struct LgdScheme **out);

/**
 * # Safety
 * `scheme` must come from this library and not have been freed. Null is
 * ignored.
 */
void lgd_scheme_free(struct LgdScheme *scheme);

/**
 * # Safety
 * `scheme` must be a live handle; `out` must be writable.
 */
enum LgdStatus lgd_scheme_alphabet_size(const struct LgdScheme *scheme, size_t *out);

/**
 * # Safety
 * `scheme` must be a live handle; `out` must be writable.
 */
enum LgdStatus lgd_scheme_is_strictly_separated(const struct LgdScheme *scheme, bool *out);

/**
 * Serializes a scheme to JSON. Release the string with
 * [`lgd_string_free`].
 *
 * # Safety
 * `scheme` must be a live handle; `out` must be writable.
 */
enum LgdStatus lgd_scheme_to_json(const struct LgdScheme *scheme, char **out);

/**
 * # Safety
 * `s` must come from this library and not have been freed. Null is
 * ignored.
 */
void lgd_string_free(char *s);

struct LgdOptions lgd_options_default(void);

/**
 * Maximizes the dimension functional of a scheme. `options` may be null
 * for defaults.
 *
 * # Safety
 * `scheme` must be a live handle, `options` null or readable, `out`
 * writable.
 */
enum LgdStatus lgd_scheme_dimension(const struct LgdScheme *scheme,
                                    const struct LgdOptions *options,
                                    struct LgdDimension *out);

/**
 * Evaluates the dimension functional at a weight vector in row-major cell
 * order.
 *
 * # Safety
 * `weights` must point to `len` readable doubles; `out` must be writable.
 */
enum LgdStatus lgd_scheme_objective(const struct LgdScheme *scheme,
                                    const double *weights,
                                    size_t len,
                                    double *out);

/**
 * Parses and validates a family from JSON.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum LgdStatus lgd_family_from_json(const char *json, struct LgdFamily **out);

/**
 * # Safety
 * `family` must come from this library and not have been freed. Null is
 * ignored.
 */
void lgd_family_free(struct LgdFamily *family);

/**
 * # Safety
 * `family` must be a live handle; `out` must be writable.
 */
enum LgdStatus lgd_family_len(const struct LgdFamily *family, size_t *out);

/**
 * Composes the schemes named by a word of 1-based symbols. The result is a
 * new scheme handle.
 *
 * # Safety
 * `word` must point to `len` readable values; `out` must be writable.
 */
enum LgdStatus lgd_family_compose_word(const struct LgdFamily *family,
                                       const size_t *word,
                                       size_t len,
                                       size_t alphabet_cap,
                                       struct LgdScheme **out);

/**
 * Dimension for the rational frequency vector `numerators / sum`.
 *
 * # Safety
 * `numerators` must point to `len` readable values, `options` null or
 * readable, `out` writable.
 */
enum LgdStatus lgd_family_dim_rational(const struct LgdFamily *family,
                                       const uint64_t *numerators,
                                       size_t len,
                                       const struct LgdOptions *options,
                                       struct LgdDimension *out);

/**
 * Closed-form dimension of an `n` by `m` uniform-grid carpet with the given
 * chosen-cell counts per nonempty row.
 *
 * # Safety
 * `row_counts` must point to `len` readable values; `out` must be writable.
 */
enum LgdStatus lgd_mcmullen_oracle(size_t n,
                                   size_t m,
                                   const size_t *row_counts,
                                   size_t len,
                                   double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LGDIM_H */
