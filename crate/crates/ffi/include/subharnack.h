#ifndef SUBHARNACK_H
#define SUBHARNACK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes shared by every entry point.
 */
typedef enum ShStatus {
  SH_STATUS_OK = 0,
  SH_STATUS_NULL_POINTER = 1,
  SH_STATUS_DOMAIN = 2,
  SH_STATUS_ACCURACY = 3,
  SH_STATUS_GRID_MISMATCH = 4,
  SH_STATUS_SINGULAR_KERNEL = 5,
  SH_STATUS_NUMERICAL = 6,
  SH_STATUS_COEFFICIENTS = 7,
  SH_STATUS_PRECONDITION = 8,
  SH_STATUS_BUFFER_TOO_SMALL = 9,
  SH_STATUS_IO = 10,
  SH_STATUS_PANIC = 11,
} ShStatus;

/**
 * Opaque evaluator of the whole-space fundamental solution.
 */
typedef struct ShFundamentalSolution ShFundamentalSolution;

/**
 * Opaque kernel table.
 */
typedef struct ShKernelTable ShKernelTable;

/**
 * Opaque space-time solution.
 */
typedef struct ShSolution ShSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *sh_last_error_message(void);

/**
 * `g_β(t) = t^{β−1}/Γ(β)` for `β > 0`, `t > 0`.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum ShStatus sh_rl_kernel(double beta, double t, double *out);

/**
 * Two-parameter Mittag-Leffler function `E_{α,β}(z)` for real `z`.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum ShStatus sh_mittag_leffler(double alpha, double beta, double z, double *out);

/**
 * `(2 + Nα)/(2 + Nα − 2α)`.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum ShStatus sh_critical_exponent(double alpha, size_t n, double *out);

/**
 * `κ_p = (2p + N(p−1))/(2 + N(p−1))` for `p > 1`; pass `INFINITY` for
 * `κ_∞ = 1 + 2/N`.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum ShStatus sh_kappa(double p, size_t n, double *out);

/**
 * Exponent `e` with `‖Y(t)‖ₚᵖ ∝ tᵉ`.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum ShStatus sh_divergence_exponent(double alpha, size_t n, double p, double *out);

/**
 * Cell-averaged `g_β` on `m` steps of width `dt`.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum ShStatus sh_kernel_rl_new(double beta, double dt, size_t m, struct ShKernelTable **out);

/**
 * Convolution weights of `g_β`; tables for `β` and `1 − β` convolve to 1.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum ShStatus sh_kernel_convolution_weights_new(double beta,
                                                double dt,
                                                size_t m,
                                                struct ShKernelTable **out);

/**
 * Yosida pair `(g_{1−α,n}, h_{α,n})`.
 *
 * # Safety
 * `g_out` and `h_out` must be valid for writes.
 */
enum ShStatus sh_kernel_yosida_new(double alpha,
                                   uint32_t n,
                                   double dt,
                                   size_t m,
                                   struct ShKernelTable **g_out,
                                   struct ShKernelTable **h_out);

/**
 * Resolvent `t^{α−1}E_{α,α}(−θt^α)`.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum ShStatus sh_kernel_resolvent_new(double alpha,
                                      double theta,
                                      double dt,
                                      size_t m,
                                      struct ShKernelTable **out);

/**
 * Number of stored values (`m + 1`).
 *
 * # Safety
 * `table` must be a live handle.
 */
enum ShStatus sh_kernel_len(const struct ShKernelTable *t, size_t *out);

/**
 * Step width.
 *
 * # Safety
 * `table` must be a live handle.
 */
enum ShStatus sh_kernel_dt(const struct ShKernelTable *t, double *out);

/**
 * Copies the values into `buf` (capacity `len`).
 *
 * # Safety
 * `t` must be a live handle and `buf` valid for `len` writes.
 */
enum ShStatus sh_kernel_values(const struct ShKernelTable *t, double *buf, size_t len);

/**
 * Product convolution `a ∗ b` at the nodes, `m + 1` values.
 *
 * # Safety
 * Both handles must be live and `buf` valid for `len` writes.
 */
enum ShStatus sh_kernel_convolve(const struct ShKernelTable *a,
                                 const struct ShKernelTable *b,
                                 double *buf,
                                 size_t len);

/**
 * # Safety
 * `t` must be null or a handle not yet freed.
 */
void sh_kernel_free(struct ShKernelTable *t);

/**
 * L1 solution of `∂ₜᵅ(u − u₀) + σu = 0` at the `m + 1` nodes of `[0, t_end]`.
 *
 * # Safety
 * `buf` must be valid for `len` writes.
 */
enum ShStatus sh_scalar_relaxation(double alpha,
                                   double sigma,
                                   double u0,
                                   double t_end,
                                   size_t m,
                                   double *buf,
                                   size_t len);

/**
 * One-dimensional solve on `(lower, upper)` with `cells` cells and `steps`
 * time steps up to `t_end`. `coeff` and `u0` hold one value per cell, the
 * coefficient is constant in time, `f = 0`, and the boundary data are the
 * constants `g_lower`, `g_upper`.
 *
 * # Safety
 * `coeff` and `u0` must point to `cells` values; `out` must be valid for a write.
 */
enum ShStatus sh_solve_1d(double alpha,
                          double lower,
                          double upper,
                          size_t cells,
                          double t_end,
                          size_t steps,
                          const double *coeff,
                          const double *u0,
                          double g_lower,
                          double g_upper,
                          struct ShSolution **out);

/**
 * Number of time levels (`steps + 1`).
 *
 * # Safety
 * `s` must be a live handle.
 */
enum ShStatus sh_solution_levels(const struct ShSolution *s, size_t *out);

/**
 * Values per level: `cells + 2` in 1D, boundary faces included.
 *
 * # Safety
 * `s` must be a live handle.
 */
enum ShStatus sh_solution_nodes(const struct ShSolution *s, size_t *out);

/**
 * Copies time level `level` into `buf`.
 *
 * # Safety
 * `s` must be a live handle and `buf` valid for `len` writes.
 */
enum ShStatus sh_solution_level(const struct ShSolution *s, size_t level, double *buf, size_t len);

/**
 * # Safety
 * `s` must be null or a handle not yet freed.
 */
void sh_solution_free(struct ShSolution *s);

/**
 * Evaluator for order `alpha` in dimension `n ∈ {1, 2, 3}`.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum ShStatus sh_fundsol_new(double alpha, size_t n, struct ShFundamentalSolution **out);

/**
 * `Y(t, x)` with `x` of length `dim`, which must match the evaluator.
 *
 * # Safety
 * `ev` must be a live handle, `x` valid for `dim` reads, `out` for a write.
 */
enum ShStatus sh_eval_y(const struct ShFundamentalSolution *ev,
                        double t,
                        const double *x,
                        size_t dim,
                        double *out);

/**
 * # Safety
 * `ev` must be null or a handle not yet freed.
 */
void sh_fundsol_free(struct ShFundamentalSolution *ev);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUBHARNACK_H */
