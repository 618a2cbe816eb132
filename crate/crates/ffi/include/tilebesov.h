#ifndef TILEBESOV_H
#define TILEBESOV_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result of every `tb_*` call.
typedef enum TbStatus {
  TB_STATUS_OK = 0,
  TB_STATUS_NULL_POINTER = 1,
  TB_STATUS_INVALID_ARGUMENT = 2,
  TB_STATUS_VALIDATION = 3,
  TB_STATUS_NUMERICAL = 4,
  TB_STATUS_CONFIG = 5,
  TB_STATUS_IO = 6,
  TB_STATUS_BUFFER_TOO_SMALL = 7,
  TB_STATUS_PANIC = 8,
} TbStatus;

// Samples of a function on a periodic refinement grid.
typedef struct TbFunction TbFunction;

// A validated tiling `(M, digits)`.
typedef struct TbTiling TbTiling;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Static description of a status code.
const char *tb_status_string(enum TbStatus status);

// Copies the calling thread's last error message into `buf` (nul-terminated, truncated to
// `cap`). Returns the full message length excluding the terminator, or 0 when there is none.
//
// # Safety
// `buf` must be null or point to `cap` writable bytes.
size_t tb_last_error_message(char *buf, size_t cap);

// Builds a tiling from a row-major `n x n` matrix and `m` digits of `n` entries each.
//
// # Safety
// `matrix` must hold `n * n` values, `digits` must hold `m * n` values and `out` must be writable.
enum TbStatus tb_tiling_new(const int64_t *matrix,
                            size_t n,
                            const int64_t *digits,
                            size_t m,
                            struct TbTiling **out_tiling);

// # Safety
// `tiling` must be null or a handle from `tb_tiling_new` not yet freed.
void tb_tiling_free(struct TbTiling *tiling);

// Dimension `n`, digit count `m` and contraction `lambda0`.
//
// # Safety
// `tiling` must be a live handle; output pointers may be null to skip them.
enum TbStatus tb_tiling_info(const struct TbTiling *tiling,
                             size_t *out_n,
                             size_t *out_m,
                             double *out_lambda0);

// Writes the `m^depth` tile points (`n` coordinates each) into `points`. With `points` null
// only `out_count` is set; a short buffer yields `BufferTooSmall` with `out_count` set.
//
// # Safety
// `points` must be null or hold `cap` writable doubles; `out_count` must be writable.
enum TbStatus tb_tiling_points(const struct TbTiling *tiling,
                               size_t depth,
                               double *points,
                               size_t cap,
                               size_t *out_count);

// Digit indices of the level-`level` cell containing `x`.
//
// # Safety
// `x` must hold `n` doubles and `digits` at least `level` writable entries.
enum TbStatus tb_tiling_locate(const struct TbTiling *tiling,
                               const double *x,
                               size_t level,
                               size_t *digits);

// Samples a builtin on the level-`level` grid of one tile. Names: `takagi` and
// `weierstrass` (parameter `mu`), `sine` (frequency), `step` (jump location), `levy`, `zero`.
//
// # Safety
// `tiling` must be a live handle, `name` a nul-terminated string and `out` writable.
enum TbStatus tb_function_builtin(const struct TbTiling *tiling,
                                  const char *name,
                                  double parameter,
                                  size_t level,
                                  struct TbFunction **out_function);

// Wraps `len` samples in grid order (`m^level` per tile).
//
// # Safety
// `samples` must hold `len` doubles and `out` must be writable.
enum TbStatus tb_function_from_samples(const struct TbTiling *tiling,
                                       size_t level,
                                       const double *samples,
                                       size_t len,
                                       struct TbFunction **out_function);

// # Safety
// `function` must be null or a live handle.
void tb_function_free(struct TbFunction *function);

// Number of samples.
//
// # Safety
// `function` must be a live handle and `out_len` writable.
enum TbStatus tb_function_len(const struct TbFunction *function, size_t *out_len);

// Copies the samples into `buf`.
//
// # Safety
// `buf` must hold `cap` writable doubles.
enum TbStatus tb_function_samples(const struct TbFunction *function, double *buf, size_t cap);

// Oscillation Besov norm up to level `lmax`; pass `INFINITY` for `p` or `q = inf`.
//
// # Safety
// `function` must be a live handle and `out_value` writable.
enum TbStatus tb_besov_norm(const struct TbFunction *function,
                            double s,
                            double p,
                            double q,
                            size_t lmax,
                            double *out_value);

// Global exponent along `route` (`osc`, `diff`, `lp-band`, `sigma`, `residue`, `coeff`,
// `wavelet`) over levels `lo..=hi`; generator routes use the Haar system.
//
// # Safety
// `function` must be a live handle, `route` nul-terminated, outputs writable or null.
enum TbStatus tb_global_exponent(const struct TbFunction *function,
                                 const char *route,
                                 double p,
                                 size_t k,
                                 size_t lo,
                                 size_t hi,
                                 double *out_estimate,
                                 bool *out_saturated);

// Pointwise exponent at `x` along `osc`, `diff` or `double-limit`.
//
// # Safety
// As `tb_global_exponent`; `x` must hold `n` doubles.
enum TbStatus tb_pointwise_exponent(const struct TbFunction *function,
                                    const double *x,
                                    const char *route,
                                    double p,
                                    size_t k,
                                    size_t lo,
                                    size_t hi,
                                    double *out_estimate);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TILEBESOV_H */
