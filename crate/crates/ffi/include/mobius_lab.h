#ifndef MOBIUS_LAB_H
#define MOBIUS_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MlStatus {
  ML_STATUS_OK = 0,
  ML_STATUS_NULL_POINTER = 1,
  ML_STATUS_INVALID_INPUT = 2,
  ML_STATUS_OUT_OF_RANGE = 3,
  ML_STATUS_OVERFLOW = 4,
  ML_STATUS_UNSUPPORTED = 5,
  ML_STATUS_INTERNAL = 6,
} MlStatus;

typedef enum MlAverageKind {
  ML_AVERAGE_KIND_CESARO = 0,
  ML_AVERAGE_KIND_LOGARITHMIC = 1,
} MlAverageKind;

/**
 * Opaque table of `mu(n)` on `[lo, hi]`.
 */
typedef struct MlMobiusTable MlMobiusTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *ml_version(void);

/**
 * Message of the last failed call on this thread; empty when none. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *ml_last_error_message(void);

/**
 * Sieves `mu` on `[lo, hi]` into a new handle stored in `*out`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle pointer.
 */
enum MlStatus ml_mobius_table_new(uint64_t lo, uint64_t hi, struct MlMobiusTable **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `table` must be null or a handle from [`ml_mobius_table_new`] not yet freed.
 */
void ml_mobius_table_free(struct MlMobiusTable *table);

/**
 * # Safety
 * `table` must be a live handle and `out` valid for one write.
 */
enum MlStatus ml_mobius_table_get(const struct MlMobiusTable *table, uint64_t n, int8_t *out);

/**
 * Stores `lo` and `hi` of the table.
 *
 * # Safety
 * `table` must be a live handle; `lo` and `hi` valid for one write each.
 */
enum MlStatus ml_mobius_table_range(const struct MlMobiusTable *table, uint64_t *lo, uint64_t *hi);

/**
 * `sum_{n <= N} mu(n + h1) mu(n + h2) / n` and its two normalisations.
 *
 * # Safety
 * `table` must be a live handle; the three outputs valid for one write each.
 */
enum MlStatus ml_chowla_log_sum(const struct MlMobiusTable *table,
                                uint64_t h1,
                                uint64_t h2,
                                uint64_t n,
                                double *raw,
                                double *ln_normalized,
                                double *harmonic_normalized);

/**
 * Average of `mu(n) e(n alpha)` over `n <= N`.
 *
 * # Safety
 * `table` must be a live handle; `re` and `im` valid for one write each.
 */
enum MlStatus ml_twisted_average(const struct MlMobiusTable *table,
                                 double alpha,
                                 uint64_t n,
                                 enum MlAverageKind kind,
                                 double *re,
                                 double *im);

/**
 * Heisenberg product in coordinates `(a, b, c)`.
 *
 * # Safety
 * `x`, `y` point to 3 readable doubles; `out` to 3 writable doubles.
 */
enum MlStatus ml_heisenberg_mul(const double *x, const double *y, double *out);

/**
 * # Safety
 * `x` points to 3 readable doubles; `out` to 3 writable doubles.
 */
enum MlStatus ml_heisenberg_inverse(const double *x, double *out);

/**
 * Upper bound on the distance of the cosets `x Gamma` and `y Gamma`.
 *
 * # Safety
 * `x`, `y` point to 3 readable doubles; `out` valid for one write.
 */
enum MlStatus ml_heisenberg_quotient_distance(const double *x,
                                              const double *y,
                                              int64_t lattice_radius,
                                              uint32_t chain_depth,
                                              double *out);

/**
 * Box-counting slope of the level-`level` Cantor set at scales `ratio^k`,
 * `k_min <= k <= k_max`.
 *
 * # Safety
 * `slope` valid for one write.
 */
enum MlStatus ml_cantor_box_dimension(double ratio,
                                      uint32_t level,
                                      uint32_t k_min,
                                      uint32_t k_max,
                                      double *slope);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MOBIUS_LAB_H */
