#ifndef OPERC_H
#define OPERC_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OpercKind {
  /**
   * Left to right.
   */
  OPERC_KIND_H = 0,
  /**
   * Bottom to top.
   */
  OPERC_KIND_V = 1,
} OpercKind;

typedef enum OpercMode {
  OPERC_MODE_FAST = 0,
  OPERC_MODE_COUPLED = 1,
} OpercMode;

typedef enum OpercStatus {
  OPERC_STATUS_OK = 0,
  OPERC_STATUS_NULL_POINTER = 1,
  OPERC_STATUS_INVALID_ARGUMENT = 2,
  OPERC_STATUS_COUPLED_MODE_REQUIRED = 3,
  OPERC_STATUS_RUNTIME = 4,
  OPERC_STATUS_BUFFER_TOO_SMALL = 5,
  OPERC_STATUS_PANIC = 6,
} OpercStatus;

/**
 * Seed and sampling mode shared by the estimators.
 */
typedef struct OpercLab OpercLab;

/**
 * A scaling table produced by one of the curve estimators.
 */
typedef struct OpercTable OpercTable;

/**
 * A proportion with its Wilson interval.
 */
typedef struct OpercEstimate {
  uint64_t k;
  uint64_t trials;
  double p_hat;
  double lo;
  double hi;
} OpercEstimate;

/**
 * One row of a scaling table. `estimate` is NaN when nothing contributed.
 */
typedef struct OpercRow {
  int64_t n;
  double estimate;
  double std_error;
  uint64_t k;
  uint64_t trials;
} OpercRow;

typedef struct OpercWidth {
  int64_t w_hat;
  int64_t m_lo;
  int64_t m_hi;
  uint64_t samples_used;
  bool unresolved;
  bool degenerate;
} OpercWidth;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message on this thread, or null. Valid until the next failing call.
 */
const char *operc_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *operc_version(void);

/**
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum OpercStatus operc_lab_new(uint64_t seed, struct OpercLab **out);

/**
 * # Safety
 * `lab` must come from [`operc_lab_new`] and not be freed already. Null is ignored.
 */
void operc_lab_free(struct OpercLab *lab);

/**
 * # Safety
 * `lab` must be a live handle.
 */
enum OpercStatus operc_lab_set_mode(struct OpercLab *lab, enum OpercMode mode);

/**
 * Crossing probability of `[0,m] x [0,n]` from `trials` replicas.
 *
 * # Safety
 * `lab` must be a live handle and `out` valid for a write.
 */
enum OpercStatus operc_crossing(const struct OpercLab *lab,
                                enum OpercKind kind,
                                int64_t m,
                                int64_t n,
                                double p,
                                uint64_t trials,
                                struct OpercEstimate *out);

/**
 * Survival probabilities at the strictly ascending heights `n_list[0..len]`.
 *
 * # Safety
 * `lab` must be a live handle, `n_list` valid for `len` reads, `out` valid for a write.
 */
enum OpercStatus operc_survival_curve(const struct OpercLab *lab,
                                      double p,
                                      const int64_t *n_list,
                                      size_t len,
                                      uint64_t trials,
                                      struct OpercTable **out);

/**
 * # Safety
 * `table` must be a live handle or null (which yields 0).
 */
size_t operc_table_len(const struct OpercTable *table);

/**
 * # Safety
 * `table` must be a live handle and `out` valid for a write.
 */
enum OpercStatus operc_table_row(const struct OpercTable *table, size_t i, struct OpercRow *out);

/**
 * Writes the table as NUL-terminated CSV into `buf`. `*needed` receives the
 * required size including the NUL; pass `buf = NULL, cap = 0` to query it.
 *
 * # Safety
 * `table` must be a live handle, `buf` valid for `cap` writes, `needed` valid for a write.
 */
enum OpercStatus operc_table_csv(const struct OpercTable *table,
                                 char *buf,
                                 size_t cap,
                                 size_t *needed);

/**
 * # Safety
 * `table` must come from this library and not be freed already. Null is ignored.
 */
void operc_table_free(struct OpercTable *table);

/**
 * Empirical width scale at height `n`.
 *
 * # Safety
 * `lab` must be a live handle and `out` valid for a write.
 */
enum OpercStatus operc_width_scale(const struct OpercLab *lab,
                                   double p,
                                   int64_t n,
                                   double alpha,
                                   double eps,
                                   uint64_t trials,
                                   uint64_t max_samples,
                                   struct OpercWidth *out);

/**
 * Parses `"fast"` or `"coupled"` (case-insensitive).
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` valid for a write.
 */
enum OpercStatus operc_mode_parse(const char *name, enum OpercMode *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OPERC_H */
