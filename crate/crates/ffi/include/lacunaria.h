#ifndef LACUNARIA_H
#define LACUNARIA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by all calls.
 */
typedef enum LacStatus {
  LAC_STATUS_OK = 0,
  LAC_STATUS_NULL_POINTER = 1,
  LAC_STATUS_INVALID_ARGUMENT = 2,
  LAC_STATUS_PARSE = 3,
  LAC_STATUS_BUDGET_EXCEEDED = 4,
  LAC_STATUS_NON_CONVERGENCE = 5,
  LAC_STATUS_NOT_FREE = 6,
  LAC_STATUS_INTERNAL = 99,
} LacStatus;

/**
 * A finitely supported element with matrix coefficients.
 */
typedef struct LacElement LacElement;

/**
 * A length function on a free group.
 */
typedef struct LacLength LacLength;

/**
 * A reduced word of a free group.
 */
typedef struct LacWord LacWord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Owned by the
 * library; valid until the next failing call.
 */
const char *lac_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *lac_version(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void lac_string_free(char *s);

/**
 * Parses a word literal such as `"1 2 -1"`, `"e"` or `"abA"`.
 *
 * # Safety
 * `literal` must be a valid C string and `out_word` writable.
 */
enum LacStatus lac_word_parse(const char *literal, struct LacWord **out_word);

/**
 * Builds a word from signed generator indices, reducing it.
 *
 * # Safety
 * `letters` must point to `len` integers (or be null when `len` is 0).
 */
enum LacStatus lac_word_from_letters(const int32_t *letters, size_t len, struct LacWord **out_word);

/**
 * # Safety
 * `w` must come from this library and not be freed twice.
 */
void lac_word_free(struct LacWord *w);

/**
 * # Safety
 * Handles must be valid.
 */
enum LacStatus lac_word_length(const struct LacWord *w, size_t *out_len);

/**
 * `a * b`, reduced.
 *
 * # Safety
 * Handles must be valid.
 */
enum LacStatus lac_word_multiply(const struct LacWord *a,
                                 const struct LacWord *b,
                                 struct LacWord **out_word);

/**
 * # Safety
 * Handles must be valid.
 */
enum LacStatus lac_word_inverse(const struct LacWord *w, struct LacWord **out_word);

/**
 * Literal form of a word; release with [`lac_string_free`].
 *
 * # Safety
 * Handles must be valid.
 */
enum LacStatus lac_word_to_string(const struct LacWord *w, char **out_str);

/**
 * Length function by name: `word`, `abs` or `pow:<alpha>`.
 *
 * # Safety
 * `name` must be a valid C string and `out_psi` writable.
 */
enum LacStatus lac_length_from_name(const char *name, struct LacLength **out_psi);

/**
 * # Safety
 * `psi` must come from this library and not be freed twice.
 */
void lac_length_free(struct LacLength *psi);

/**
 * # Safety
 * Handles must be valid.
 */
enum LacStatus lac_length_evaluate(const struct LacLength *psi,
                                   const struct LacWord *w,
                                   double *out_value);

/**
 * Conditional negativity of `psi` on the ball of the given rank and radius.
 * `out_passed` receives 1 or 0.
 *
 * # Safety
 * Handles must be valid.
 */
enum LacStatus lac_cn_check_ball(const struct LacLength *psi,
                                 uint32_t rank,
                                 size_t radius,
                                 double tol,
                                 int *out_passed,
                                 double *out_max_eigenvalue);

/**
 * Element from the JSON fixture format.
 *
 * # Safety
 * `json` must be a valid C string and `out_element` writable.
 */
enum LacStatus lac_element_from_json(const char *json, struct LacElement **out_element);

/**
 * Scalar element `sum re[i] + i im[i]` at `words[i]`.
 *
 * # Safety
 * The three arrays must hold `len` entries; word handles must be valid.
 */
enum LacStatus lac_element_from_scalars(const struct LacWord *const *words,
                                        const double *re,
                                        const double *im,
                                        size_t len,
                                        struct LacElement **out_element);

/**
 * # Safety
 * `x` must come from this library and not be freed twice.
 */
void lac_element_free(struct LacElement *x);

/**
 * Number of support terms.
 *
 * # Safety
 * Handles must be valid.
 */
enum LacStatus lac_element_len(const struct LacElement *x, size_t *out_len);

/**
 * `‖sum c^† c‖` and `‖sum c c^†‖`.
 *
 * # Safety
 * Handles must be valid.
 */
enum LacStatus lac_element_rcp_norms(const struct LacElement *x,
                                     double *out_column,
                                     double *out_row);

/**
 * Exact `‖x‖_p` for even `p`.
 *
 * # Safety
 * Handles must be valid.
 */
enum LacStatus lac_element_moment_norm(const struct LacElement *x,
                                       uint32_t p,
                                       size_t support_cap,
                                       double *out_norm);

/**
 * Lower bound for the operator norm from the ball of radius `radius`.
 *
 * # Safety
 * Handles must be valid.
 */
enum LacStatus lac_element_operator_norm_lower(const struct LacElement *x,
                                               size_t radius,
                                               size_t ball_cap,
                                               double *out_norm);

/**
 * Haagerup-Pisier upper bound, after certifying the support as a free set.
 * Fails with `LAC_STATUS_NOT_FREE` when it is not.
 *
 * # Safety
 * Handles must be valid.
 */
enum LacStatus lac_element_free_upper_bound(const struct LacElement *x, double *out_bound);

/**
 * BMO estimate on the log grid `grid[0..grid_len]`. `out_upper` receives
 * NaN when no lacunary certificate exists.
 *
 * # Safety
 * Handles must be valid; `grid` must hold `grid_len` values.
 */
enum LacStatus lac_bmo_estimate(const struct LacLength *psi,
                                const struct LacElement *x,
                                const double *grid,
                                size_t grid_len,
                                size_t radius,
                                double *out_lower,
                                double *out_upper,
                                double *out_lower_witness);

/**
 * Circle BMO estimate for scalar elements of `Z`.
 *
 * # Safety
 * Handles must be valid; `grid` must hold `grid_len` values.
 */
enum LacStatus lac_torus_bmo_estimate(const struct LacLength *psi,
                                      const struct LacElement *x,
                                      const double *grid,
                                      size_t grid_len,
                                      size_t samples,
                                      double *out_value);

/**
 * Free basis test by folding. `out_free` receives 1 or 0.
 *
 * # Safety
 * `words` must hold `len` valid handles.
 */
enum LacStatus lac_is_free_basis(const struct LacWord *const *words,
                                 size_t len,
                                 int *out_free,
                                 size_t *out_rank);

/**
 * Size of `π(Q_n)` within the ball of radius `2nm` of `F_2`.
 *
 * # Safety
 * Output pointers must be writable.
 */
enum LacStatus lac_count_intersection(size_t n,
                                      uint32_t m,
                                      size_t *out_count,
                                      double *out_ratio,
                                      double *out_ball_exponent);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LACUNARIA_H */
