#ifndef POLAR_LDGM_H
#define POLAR_LDGM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes shared by every fallible function.
typedef enum PlStatus {
  PL_STATUS_OK = 0,
  PL_STATUS_NULL_POINTER = 1,
  PL_STATUS_DIMENSION = 2,
  PL_STATUS_SINGULAR = 3,
  PL_STATUS_NOT_POLARIZING = 4,
  PL_STATUS_DOMAIN = 5,
  PL_STATUS_UNSUPPORTED = 6,
  PL_STATUS_REFUSED = 7,
  PL_STATUS_PARSE = 8,
  PL_STATUS_INFEASIBLE = 9,
  PL_STATUS_BUFFER_TOO_SMALL = 10,
  PL_STATUS_PANIC = 11,
} PlStatus;

// Opaque column-sparse generator matrix.
typedef struct PlGenerator PlGenerator;

// Opaque polarizing kernel.
typedef struct PlKernel PlKernel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. The pointer stays
// valid until the next failing call on the same thread.
const char *pl_last_error(void);

// Releases a string returned by this library.
//
// # Safety
// `s` must be null or a string returned by this library, not yet freed.
void pl_string_free(char *s);

// Looks up a catalogue kernel such as `"G2"` or `"G3*"`.
//
// # Safety
// `name` must be a NUL-terminated string and `out` a writable pointer.
enum PlStatus pl_kernel_by_name(const char *name, struct PlKernel **out);

// Builds a kernel from `l * l` row-major bytes, each 0 or 1.
//
// # Safety
// `bits` must point to `l * l` readable bytes and `out` must be writable.
enum PlStatus pl_kernel_from_bits(const uint8_t *bits, uintptr_t l, struct PlKernel **out);

// # Safety
// `k` must be null or a kernel from this library, not yet freed.
void pl_kernel_free(struct PlKernel *k);

// Side length `l`, or 0 for a null handle.
//
// # Safety
// `k` must be null or a live kernel handle.
uintptr_t pl_kernel_size(const struct PlKernel *k);

// Rate of polarization, or NaN for a null handle.
//
// # Safety
// `k` must be null or a live kernel handle.
double pl_kernel_exponent(const struct PlKernel *k);

// Copies the `l` partial distances into `out`.
//
// # Safety
// `k` must be a live kernel handle and `out` must hold `cap` values.
enum PlStatus pl_kernel_partial_distances(const struct PlKernel *k, uintptr_t *out, uintptr_t cap);

// Erasure probabilities of the `l^n` bit channels over BEC(`z`).
//
// # Safety
// `k` must be a live kernel handle and `out` must hold `cap` values.
enum PlStatus pl_bec_reliabilities(const struct PlKernel *k,
                                   uint32_t n,
                                   double z,
                                   double *out,
                                   uintptr_t cap);

// Generator made of the rows of `K^{(x)n}` listed in `info_set`.
//
// # Safety
// `k` must be a live kernel handle, `info_set` must hold `len` indices and
// `out` must be writable.
enum PlStatus pl_generator_build(const struct PlKernel *k,
                                 uint32_t n,
                                 const uintptr_t *info_set,
                                 uintptr_t len,
                                 struct PlGenerator **out);

// # Safety
// `g` must be null or a generator from this library, not yet freed.
void pl_generator_free(struct PlGenerator *g);

// # Safety
// `g` must be null or a live generator handle.
uintptr_t pl_generator_rows(const struct PlGenerator *g);

// # Safety
// `g` must be null or a live generator handle.
uintptr_t pl_generator_cols(const struct PlGenerator *g);

// # Safety
// `g` must be null or a live generator handle.
uintptr_t pl_generator_max_column_weight(const struct PlGenerator *g);

// Copies the column weights into `out`.
//
// # Safety
// `g` must be a live generator handle and `out` must hold `cap` values.
enum PlStatus pl_generator_column_weights(const struct PlGenerator *g,
                                          uintptr_t *out,
                                          uintptr_t cap);

// Splits every column heavier than `w_ub`. Writes the new generator to
// `out` and the added-column ratio as a `"p/q"` string to `ratio`, which
// may be null. The string is released with [`pl_string_free`].
//
// # Safety
// `g` must be a live generator handle, `out` writable and `ratio` null or
// writable.
enum PlStatus pl_generator_split(const struct PlGenerator *g,
                                 uintptr_t w_ub,
                                 struct PlGenerator **out,
                                 char **ratio);

// Exact fraction of columns added when `G2^{(x)n}` is split at `w_ub`, as
// a `"p/q"` string, or null on failure. Release with [`pl_string_free`].
char *pl_exact_rate_loss(uint32_t n, uint64_t w_ub);

// Threshold on the sparsity exponent separating vanishing from diverging
// rate loss.
double pl_epsilon_star(void);

// Library version as a static string.
const char *pl_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POLAR_LDGM_H */
