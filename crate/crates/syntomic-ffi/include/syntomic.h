/* C interface for the syntomic K-group library.
 *
 * Computes the p-primary parts of the algebraic K-groups K_{2i-1} and
 * K_{2i-2} of a finite chain ring O_K/pi^n (for example Z/p^n), reported
 * as lists of exponents a_1 <= a_2 <= ... meaning a direct sum of cyclic
 * groups Z/p^{a_j}, together with the certified p-adic precision.
 *
 * Usage:
 *
 *   syntomic_result *res = NULL;
 *   int64_t eis[] = {1};                          // E = z + p (unramified)
 *   int32_t rc = syntomic_compute(2, 1, 2, 2, eis, 1, 0, 0, &res);
 *   if (rc != SYNTOMIC_OK) { puts(syntomic_status_message(rc)); ... }
 *   size_t len = syntomic_result_h1_len(res);     // summands of K_3(Z/4)
 *   uint32_t a0 = syntomic_result_h1_exponent(res, 0);
 *   syntomic_result_free(res);
 */

#ifndef SYNTOMIC_H
#define SYNTOMIC_H

#include <stdint.h>
#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes returned by syntomic_compute. */
enum {
  SYNTOMIC_OK = 0,
  SYNTOMIC_ERR_INVALID_ARGUMENT = 1, /* bad p, n, i, or Eisenstein data   */
  SYNTOMIC_ERR_PRECISION = 2,        /* working precision exhausted       */
  SYNTOMIC_ERR_CHECK_FAILED = 3,     /* internal cross-check failed       */
  SYNTOMIC_ERR_INTERNAL = 4,         /* other library error               */
  SYNTOMIC_ERR_PANIC = 5             /* panic caught at the boundary      */
};

/* Opaque handle owning one computed result. */
typedef struct syntomic_result syntomic_result;

/* Compute K_{2i-1} and K_{2i-2} of O_K/pi^n where O_K is the ring of
 * integers of an extension of Q_p with residue degree f and Eisenstein
 * polynomial E = p + c_1 z + ... + c_e z^e; `eisenstein` holds c_1..c_e.
 * Pass eisenstein = {1}, len 1 (or len 0) for the unramified case.
 * `precision` 0 selects the planned working precision; nonzero overrides
 * it.  Nonzero `adaptive` retries with doubled precision on exhaustion.
 * On SYNTOMIC_OK, *out owns a fresh handle. */
int32_t syntomic_compute(uint64_t p,
                         size_t f,
                         uint32_t n,
                         uint64_t i,
                         const int64_t *eisenstein,
                         size_t eisenstein_len,
                         uint32_t precision,
                         int32_t adaptive,
                         syntomic_result **out);

/* Release a handle.  NULL is a no-op. */
void syntomic_result_free(syntomic_result *res);

/* Number of cyclic summands of K_{2i-1} resp. K_{2i-2}. */
size_t syntomic_result_h1_len(const syntomic_result *res);
size_t syntomic_result_h2_len(const syntomic_result *res);

/* Exponent of the idx-th summand (the summand is Z/p^value); 0 when idx is
 * out of range. */
uint32_t syntomic_result_h1_exponent(const syntomic_result *res, size_t idx);
uint32_t syntomic_result_h2_exponent(const syntomic_result *res, size_t idx);

/* Certified p-adic digits of the reported exponents, and the working
 * precision the computation ran at. */
uint32_t syntomic_result_valid_digits(const syntomic_result *res);
uint32_t syntomic_result_working_digits(const syntomic_result *res);

/* The whole result as a JSON object; caller frees the returned string with
 * syntomic_string_free.  NULL on NULL input. */
char *syntomic_result_json(const syntomic_result *res);
void syntomic_string_free(char *s);

/* Static description of a status code; never NULL, do not free. */
const char *syntomic_status_message(int32_t code);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SYNTOMIC_H */
