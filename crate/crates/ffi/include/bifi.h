#ifndef BIFI_H
#define BIFI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Values 2 to 4 follow the CLI exit codes.
 */
typedef enum BifiStatus {
  BIFI_STATUS_OK = 0,
  BIFI_STATUS_NULL_POINTER = 1,
  BIFI_STATUS_INVALID_ARGUMENT = 2,
  BIFI_STATUS_DATA = 3,
  BIFI_STATUS_NUMERICAL = 4,
  BIFI_STATUS_PANIC = 5,
} BifiStatus;

typedef enum BifiFamily {
  BIFI_FAMILY_LEGENDRE = 0,
  BIFI_FAMILY_HERMITE = 1,
} BifiFamily;

/**
 * Opaque polynomial chaos basis.
 */
typedef struct BifiBasis BifiBasis;

/**
 * Opaque fitted bi-fidelity model.
 */
typedef struct BifiModel BifiModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *bifi_last_error_message(void);

/**
 * Standard normal CDF.
 */
double bifi_std_normal_cdf(double t);

/**
 * Total-degree basis of order `p` in `d` dimensions.
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum BifiStatus bifi_basis_new(size_t d, size_t p, enum BifiFamily family, struct BifiBasis **out);

/**
 * Number of basis functions, or 0 for a null handle.
 *
 * # Safety
 * `basis` must be null or a live handle from [`bifi_basis_new`].
 */
size_t bifi_basis_len(const struct BifiBasis *basis);

/**
 * Measurement matrix (P x n, row-major) at `n` samples given as an `n x d` row-major buffer.
 *
 * # Safety
 * `samples` must hold `n * d` doubles and `out` room for `P * n` doubles.
 */
enum BifiStatus bifi_basis_eval(const struct BifiBasis *basis,
                                const double *samples,
                                size_t n,
                                size_t d,
                                double *out);

/**
 * # Safety
 * `basis` must be null or a handle not freed before.
 */
void bifi_basis_free(struct BifiBasis *basis);

/**
 * Fit a bi-fidelity model.
 *
 * `lf` is `m x big_n`, `hf` is `big_m x big_n` (only the columns listed in
 * `hf_indices` are read) and `inputs` is `big_n x d`, all row-major. The LF
 * expansion uses l1,2-minimization when `sparse` is non-zero and least
 * squares otherwise.
 *
 * # Safety
 * Buffers must have the stated sizes; `out` must be a valid handle slot.
 */
enum BifiStatus bifi_smr_fit(const double *lf,
                             size_t m,
                             const double *hf,
                             size_t big_m,
                             const double *inputs,
                             size_t big_n,
                             size_t d,
                             const size_t *hf_indices,
                             size_t n,
                             const struct BifiBasis *basis,
                             size_t rank,
                             int32_t sparse,
                             struct BifiModel **out);

/**
 * Rank `r` of the reduced basis, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t bifi_model_rank(const struct BifiModel *model);

/**
 * Number of HF points `M`, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t bifi_model_points(const struct BifiModel *model);

/**
 * Predictions (M x k, row-major) at `k` inputs given as a `k x d` row-major buffer.
 *
 * # Safety
 * Buffers must have the stated sizes.
 */
enum BifiStatus bifi_model_predict(const struct BifiModel *model,
                                   const double *inputs,
                                   size_t k,
                                   size_t d,
                                   double *out);

/**
 * Pointwise mean and variance, each `M` doubles.
 *
 * # Safety
 * `mean` and `variance` must each have room for `M` doubles.
 */
enum BifiStatus bifi_model_statistics(const struct BifiModel *model,
                                      double *mean,
                                      double *variance);

/**
 * # Safety
 * `model` must be null or a handle not freed before.
 */
void bifi_model_free(struct BifiModel *model);

/**
 * Practical error bounds from `n_hat` HF samples `h` and their estimates
 * `h_hat` (both `m x n_hat`, row-major). Pointwise outputs hold `m` doubles.
 *
 * # Safety
 * Buffers must have the stated sizes; scalar outputs must be valid pointers.
 */
enum BifiStatus bifi_practical_bounds(const double *h,
                                      const double *h_hat,
                                      size_t m,
                                      size_t n_hat,
                                      double t,
                                      double *pointwise_bound,
                                      double *pointwise_prob,
                                      double *sum_bound,
                                      double *sum_prob);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BIFI_H */
