#ifndef POQ_H
#define POQ_H

/* Generated by cbindgen from the poq-ffi crate. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Challenge ordering for a run: commit first, or challenge first with the
 * commitment measured last.
 */
typedef enum PoqMode {
  POQ_MODE_INTERACTIVE = 0,
  POQ_MODE_DELAYED = 1,
} PoqMode;

/**
 * Result code returned by every fallible call. Anything other than `OK`
 * leaves a message readable through `poq_last_error_message`.
 */
typedef enum PoqStatus {
  POQ_STATUS_OK = 0,
  POQ_STATUS_NULL_POINTER = 1,
  POQ_STATUS_INVALID_ARGUMENT = 2,
  POQ_STATUS_INVALID_UTF8 = 3,
  POQ_STATUS_PANIC = 4,
} PoqStatus;

/**
 * Opaque prover handle. Honest provers own a prepared statevector.
 */
typedef struct PoqProver PoqProver;

/**
 * Opaque verifier handle owning the instance, trapdoor, and claw tables.
 */
typedef struct PoqVerifier PoqVerifier;

/**
 * Shot totals for one branch of a run.
 */
typedef struct PoqBranchTally {
  uint64_t raw;
  uint64_t discarded_commitment;
  uint64_t discarded_zero_response;
  uint64_t counted;
  uint64_t accepted;
} PoqBranchTally;

/**
 * Totals for both branches of a run.
 */
typedef struct PoqTally {
  struct PoqBranchTally standard;
  struct PoqBranchTally interference;
} PoqTally;

/**
 * Acceptance rates and the scores derived from them. `sigma` is negative
 * infinity when the quantumness score does not exceed the classical bound.
 */
typedef struct PoqScore {
  double p_a;
  double p_b;
  double quantumness;
  double standard_error;
  double ln_p_value;
  double sigma;
} PoqScore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a verifier for a named study instance and writes the handle to
 * `out`. `protocol` is `"factoring"` (instances 8, 15, 16, 21) or `"lwe"`
 * (instances 0 through 3). Release the handle with `poq_verifier_free`.
 *
 * # Safety
 * `protocol` must point to a NUL-terminated string and `out` must point to
 * writable storage for one pointer.
 */
enum PoqStatus poq_verifier_new(const char *protocol, uint64_t instance, struct PoqVerifier **out);

/**
 * Releases a verifier handle. Passing null is a no-op.
 *
 * # Safety
 * `verifier` must be null or a pointer returned by `poq_verifier_new` that
 * has not already been freed.
 */
void poq_verifier_free(struct PoqVerifier *verifier);

/**
 * Builds a prover against the verifier's public instance and writes the
 * handle to `out`. `kind` is `"honest"` for the simulated quantum prover,
 * or `"known_preimage"` / `"random"` for the classical baselines. Release
 * the handle with `poq_prover_free`.
 *
 * # Safety
 * `verifier` must be a live handle from `poq_verifier_new`, `kind` must
 * point to a NUL-terminated string, and `out` must point to writable
 * storage for one pointer.
 */
enum PoqStatus poq_prover_new(const struct PoqVerifier *verifier,
                              const char *kind,
                              uint64_t seed,
                              struct PoqProver **out);

/**
 * Releases a prover handle. Passing null is a no-op.
 *
 * # Safety
 * `prover` must be null or a pointer returned by `poq_prover_new` that has
 * not already been freed.
 */
void poq_prover_free(struct PoqProver *prover);

/**
 * Runs the full protocol, `shots_standard` standard-branch shots followed
 * by `shots_interference` interference-branch shots, and writes the branch
 * totals to `tally`. All per-shot randomness derives from `seed`, so equal
 * arguments reproduce equal tallies. The call blocks until every shot has
 * been played.
 *
 * # Safety
 * `verifier` and `prover` must be live handles from this library and
 * `tally` must point to writable storage for one `PoqTally`.
 */
enum PoqStatus poq_run(const struct PoqVerifier *verifier,
                       struct PoqProver *prover,
                       uint64_t shots_standard,
                       uint64_t shots_interference,
                       enum PoqMode mode,
                       uint64_t seed,
                       struct PoqTally *tally);

/**
 * Scores a tally against the verifier's protocol: acceptance rates, the
 * quantumness score with its standard error, and the log tail probability
 * with its one-sided sigma equivalent. Both branches must have at least
 * one counted shot.
 *
 * # Safety
 * `verifier` must be a live handle from `poq_verifier_new`, and `tally`
 * and `score` must point to readable and writable storage respectively.
 */
enum PoqStatus poq_tally_score(const struct PoqVerifier *verifier,
                               const struct PoqTally *tally,
                               struct PoqScore *score);

/**
 * Copies the message from the most recent failure on this thread into
 * `buf` (truncated, always NUL-terminated when `len > 0`) and returns the
 * full message length in bytes, excluding the terminator.
 *
 * # Safety
 * `buf` must be null or point to at least `len` writable bytes.
 */
size_t poq_last_error_message(char *buf, size_t len);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* POQ_H */
