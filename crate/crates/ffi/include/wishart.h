#ifndef WISHART_H
#define WISHART_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. Zero is success.
typedef enum WishartStatus {
  WISHART_STATUS_OK = 0,
  WISHART_STATUS_NULL_POINTER = 1,
  WISHART_STATUS_INVALID_ARGUMENT = 2,
  WISHART_STATUS_DIMENSION_MISMATCH = 3,
  WISHART_STATUS_NOT_SYMMETRIC = 4,
  WISHART_STATUS_NOT_PSD = 5,
  WISHART_STATUS_SINGULAR = 6,
  WISHART_STATUS_UNSTABLE_DRIFT = 7,
  WISHART_STATUS_STEP_UNDERFLOW = 8,
  WISHART_STATUS_NON_FINITE = 9,
  WISHART_STATUS_OUT_OF_RANGE = 10,
  WISHART_STATUS_BUFFER_TOO_SMALL = 11,
  WISHART_STATUS_PANIC = 12,
} WishartStatus;

// Wishart SDE parameters `(Q, K, α, S₀)`.
typedef struct WishartModel WishartModel;

// A simulated trajectory.
typedef struct WishartPath WishartPath;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the message of the most recent failure on this thread into `buf`
// (NUL-terminated, truncated to `len`). Returns the full message length
// excluding the terminator, or 0 if there is none.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t wishart_last_error(char *buf, size_t len);

// Builds a model from `p×p` row-major `q`, `k`, `s0` and `alpha`.
//
// # Safety
// Matrix pointers must reference `p*p` doubles; `out` must be writable.
enum WishartStatus wishart_model_new(size_t p,
                                     const double *q,
                                     const double *k,
                                     double alpha,
                                     const double *s0,
                                     struct WishartModel **out);

// Model equivalent to the CIR short rate `dr = a(b - r)dt + σ√r dW`.
//
// # Safety
// `out` must be writable.
enum WishartStatus wishart_model_from_cir(double a,
                                          double b,
                                          double sigma,
                                          double r0,
                                          struct WishartModel **out);

// Dimension `p` of the model, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t wishart_model_dim(const struct WishartModel *model);

// # Safety
// `model` must be null or a handle from `wishart_model_new`, not yet freed.
void wishart_model_free(struct WishartModel *model);

// Adaptive Euler path on `[0, horizon]` with initial step `h0`. The same
// `(seed, stream)` pair reproduces the same path.
//
// # Safety
// `model` must be a live handle; `out` must be writable.
enum WishartStatus wishart_simulate(const struct WishartModel *model,
                                    double horizon,
                                    double h0,
                                    uint64_t seed,
                                    uint64_t stream,
                                    struct WishartPath **out);

// Number of recorded states, or 0 for a null handle.
//
// # Safety
// `path` must be null or a live handle.
size_t wishart_path_len(const struct WishartPath *path);

// Matrix dimension of the states, or 0 for a null handle.
//
// # Safety
// `path` must be null or a live handle.
size_t wishart_path_dim(const struct WishartPath *path);

// Writes the time mesh into `times`, which must hold `wishart_path_len`
// values.
//
// # Safety
// `path` must be a live handle; `times` must point to `cap` doubles.
enum WishartStatus wishart_path_times(const struct WishartPath *path, double *times, size_t cap);

// Writes state `index` row-major into `state` (`p*p` doubles).
//
// # Safety
// `path` must be a live handle; `state` must point to `p*p` doubles.
enum WishartStatus wishart_path_state(const struct WishartPath *path, size_t index, double *state);

// # Safety
// `path` must be null or a handle from `wishart_simulate`, not yet freed.
void wishart_path_free(struct WishartPath *path);

// `E[etr(-U S)]` for `S ~ W_p(n, Σ, Θ)`.
//
// # Safety
// `sigma`, `theta`, `u` must reference `p*p` doubles; `out` must be writable.
enum WishartStatus wishart_laplace_transform(size_t p,
                                             double n,
                                             const double *sigma,
                                             const double *theta,
                                             const double *u,
                                             double *out);

// Closed-form zero-coupon bond price under CIR for short rate `r` and
// time to maturity `h`.
//
// # Safety
// `out` must be writable.
enum WishartStatus wishart_cir_bond_price(double a,
                                          double b,
                                          double sigma,
                                          double r,
                                          double h,
                                          double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WISHART_H */
