#ifndef POULSEN_H
#define POULSEN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stdint.h>
#include <stddef.h>

/**
 * Result code of every fallible call.
 */
typedef enum {
  PL_STATUS_OK = 0,
  PL_STATUS_NULL_POINTER = 1,
  PL_STATUS_INVALID_ARGUMENT = 2,
  PL_STATUS_LENGTH_MISMATCH = 3,
  PL_STATUS_OUT_OF_RANGE = 4,
  PL_STATUS_PARSE = 5,
  PL_STATUS_INSUFFICIENT_GENERICITY = 6,
  PL_STATUS_TOO_LARGE = 7,
  PL_STATUS_INTERNAL = 8,
} PlStatus;

/**
 * A set of moduli.
 */
typedef struct PlBSet PlBSet;

/**
 * One of the two ladder chains with exact rational entries.
 */
typedef struct PlChain PlChain;

/**
 * Outcome of a midpoint construction.
 */
typedef struct PlMidpoint PlMidpoint;

/**
 * A finite 0/1 window.
 */
typedef struct PlWindow PlWindow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Release with
 * [`pl_string_free`].
 */
char *pl_last_error_message(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void pl_string_free(char *s);

/**
 * Library version; static storage, do not free.
 */
const char *pl_version(void);

/**
 * Parse `"2,3,25"`, `"squares-of-primes"` or `"primitive-abundant"`.
 * `limit` is required (nonzero) for the generated families.
 *
 * # Safety
 * `spec` must be a NUL-terminated string and `out` a valid pointer.
 */
PlStatus pl_bset_parse(const char *spec, uint64_t limit, PlBSet **out);

/**
 * # Safety
 * `b` must be null or a handle from [`pl_bset_parse`].
 */
void pl_bset_free(PlBSet *b);

/**
 * Fraction of `[0, n)` free of every modulus.
 *
 * # Safety
 * Valid handle and output pointer.
 */
PlStatus pl_bset_density(const PlBSet *b, uint64_t n, double *out);

/**
 * The indicator window of the B-free integers on `[0, n)`.
 *
 * # Safety
 * Valid handle and output pointer.
 */
PlStatus pl_bset_sieve(const PlBSet *b, uint64_t n, PlWindow **out);

/**
 * Window on `[start, start + len)` from one byte per symbol (nonzero = 1).
 *
 * # Safety
 * `bits` must point to `len` readable bytes.
 */
PlStatus pl_window_from_bits(int64_t start, const uint8_t *bits, uintptr_t len, PlWindow **out);

/**
 * Seeded i.i.d. window with `P(1) = p`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
PlStatus pl_window_bernoulli(int64_t start, uintptr_t len, double p, uint64_t seed, PlWindow **out);

/**
 * Coordinatewise product of two aligned windows.
 *
 * # Safety
 * Valid handles and output pointer.
 */
PlStatus pl_window_multiply(const PlWindow *a, const PlWindow *b, PlWindow **out);

/**
 * # Safety
 * `w` must be a valid handle; returns 0 for null.
 */
uintptr_t pl_window_len(const PlWindow *w);

/**
 * # Safety
 * `w` must be a valid handle; returns 0 for null.
 */
uint64_t pl_window_count_ones(const PlWindow *w);

/**
 * Copy the symbols (one byte each) into `buf`, which holds `buf_len` bytes.
 *
 * # Safety
 * `buf` must be writable for `buf_len` bytes.
 */
PlStatus pl_window_copy_bits(const PlWindow *w, uint8_t *buf, uintptr_t buf_len);

/**
 * The window in the text format `# start=<i> length=<N>` plus one line of bits.
 *
 * # Safety
 * Valid handle; release the result with [`pl_string_free`].
 */
char *pl_window_to_string(const PlWindow *w);

/**
 * # Safety
 * `w` must be null or a window handle.
 */
void pl_window_free(PlWindow *w);

/**
 * Build the single (`doubled == false`) or doubled ladder chain.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
PlStatus pl_chain_new(uintptr_t n0, bool doubled, PlChain **out);

/**
 * # Safety
 * `c` must be a valid handle; returns 0 for null.
 */
uintptr_t pl_chain_state_count(const PlChain *c);

/**
 * Row-stochastic and `p·P = p`, in exact arithmetic.
 *
 * # Safety
 * Valid handle and output pointer.
 */
PlStatus pl_chain_verify(const PlChain *c, bool *out);

/**
 * Stationary weight of state `i` as `"num/den"`.
 *
 * # Safety
 * Valid handle; release the result with [`pl_string_free`].
 */
char *pl_chain_stationary(const PlChain *c, uintptr_t i);

/**
 * Smallest power with all entries positive; 0 if the chain is not primitive.
 *
 * # Safety
 * Valid handle and output pointer.
 */
PlStatus pl_chain_primitivity_exponent(const PlChain *c, uintptr_t *out);

/**
 * # Safety
 * `c` must be null or a chain handle.
 */
void pl_chain_free(PlChain *c);

/**
 * Run the midpoint construction. `eps <= 0` selects `eps0 / 2`; `n0 == 0`
 * selects the automatic block length.
 *
 * # Safety
 * Valid window handles and output pointer.
 */
PlStatus pl_midpoint_run(const PlWindow *eta_nu,
                         const PlWindow *x1,
                         const PlWindow *x2,
                         uintptr_t k0,
                         double eps0,
                         double eps,
                         uintptr_t n0,
                         uint64_t seed,
                         PlMidpoint **out);

/**
 * # Safety
 * Valid handle and output pointer.
 */
PlStatus pl_midpoint_achieved_tv(const PlMidpoint *r, double *out);

/**
 * `true` iff every internal check of the run holds.
 *
 * # Safety
 * Valid handle and output pointer.
 */
PlStatus pl_midpoint_passed(const PlMidpoint *r, bool *out);

/**
 * # Safety
 * Valid handle and output pointer.
 */
PlStatus pl_midpoint_n0(const PlMidpoint *r, uintptr_t *out);

/**
 * A new window handle holding the constructed sequence.
 *
 * # Safety
 * Valid handle and output pointer.
 */
PlStatus pl_midpoint_eta_bar(const PlMidpoint *r, PlWindow **out);

/**
 * Diagnostics as JSON.
 *
 * # Safety
 * Valid handle; release the result with [`pl_string_free`].
 */
char *pl_midpoint_to_json(const PlMidpoint *r);

/**
 * # Safety
 * `r` must be null or a midpoint handle.
 */
void pl_midpoint_free(PlMidpoint *r);

/**
 * Whether neither full-support pattern of two equal-length periods occurs in
 * the hereditary closure of the other.
 *
 * # Safety
 * NUL-terminated block literals and a valid output pointer.
 */
PlStatus pl_periods_separated(const char *a, const char *b, bool *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POULSEN_H */
