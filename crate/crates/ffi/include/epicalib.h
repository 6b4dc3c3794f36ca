/* C ABI for the epicalib agent-based SIR calibration toolkit. */

#ifndef EPICALIB_H
#define EPICALIB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes returned by every fallible call.
 */
typedef enum {
  EPICALIB_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  EPICALIB_STATUS_NULL_POINTER = 1,
  /**
   * A parameter value was out of range.
   */
  EPICALIB_STATUS_INVALID_PARAM = 2,
  /**
   * Filesystem failure.
   */
  EPICALIB_STATUS_IO = 3,
  /**
   * A file exists but does not match the expected format.
   */
  EPICALIB_STATUS_SCHEMA = 4,
  /**
   * A numeric computation failed.
   */
  EPICALIB_STATUS_NUMERIC = 5,
  /**
   * Array dimensions did not line up.
   */
  EPICALIB_STATUS_SHAPE_MISMATCH = 6,
  /**
   * An internal invariant was violated.
   */
  EPICALIB_STATUS_PANIC = 7,
} EpicalibStatus;

/**
 * Opaque handle to a trained calibration model.
 */
typedef struct EpicalibModel EpicalibModel;

/**
 * Parameters of one forward simulation.
 */
typedef struct {
  /**
   * Population size.
   */
  uint32_t n;
  /**
   * Initially infected agents.
   */
  uint32_t i0;
  /**
   * Expected contacts per infectious agent per day.
   */
  double c_rate;
  /**
   * Per-contact transmission probability in [0,1].
   */
  double p_tran;
  /**
   * Per-day recovery probability in (0,1].
   */
  double p_recov;
  /**
   * Days to simulate.
   */
  uint32_t horizon;
  /**
   * Seed; identical specs reproduce identical curves.
   */
  uint64_t seed;
} EpicalibSimSpec;

/**
 * Settings for one likelihood-free MCMC calibration run.
 */
typedef struct {
  /**
   * Population size held fixed during calibration.
   */
  uint32_t n;
  /**
   * Initial infected count held fixed during calibration.
   */
  uint32_t i0;
  /**
   * Chain length.
   */
  uint64_t iterations;
  /**
   * Iterations discarded before the point estimate.
   */
  uint64_t burn_in;
  /**
   * Proposal perturbation scale.
   */
  double proposal_sigma;
  /**
   * Kernel bandwidth factor of the observed series norm.
   */
  double kernel_scale;
  /**
   * Chain start (contact rate, recovery probability, transmission
   * probability).
   */
  double init_c_rate;
  double init_p_recov;
  double init_p_tran;
  /**
   * Seed; identical inputs reproduce identical estimates.
   */
  uint64_t seed;
} EpicalibAbcSpec;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message for this thread into `buf` (NUL
 * terminated, truncated to `cap`). Returns the full message length in
 * bytes, excluding the terminator; call with `cap = 0` to query the size.
 */
size_t epicalib_last_error(char *buf, size_t cap);

/**
 * Library version as a static NUL-terminated string.
 */
const char *epicalib_version(void);

/**
 * Simulates an epidemic and writes `spec->horizon` daily new-infection
 * counts into `out_incidence` (day 0 holds the seed cases).
 */
EpicalibStatus epicalib_simulate(const EpicalibSimSpec *spec, uint32_t *out_incidence);

/**
 * Loads a trained model from its JSON file. Returns null on failure (see
 * [`epicalib_last_error`]); release with [`epicalib_model_free`].
 */
EpicalibModel *epicalib_model_load(const char *path);

/**
 * Releases a model handle. Passing null is a no-op.
 */
void epicalib_model_free(EpicalibModel *model);

/**
 * Sequence length the model was trained for.
 */
uint32_t epicalib_model_horizon(const EpicalibModel *model);

/**
 * Calibrates an observed curve with one forward pass. `incidence` holds
 * `len` daily counts (integral values); shorter-than-horizon curves are
 * padded and masked. Writes `{p_tran, c_rate, r0}` into `out_theta[3]`.
 */
EpicalibStatus epicalib_model_predict(const EpicalibModel *model,
                                      const double *incidence,
                                      size_t len,
                                      uint32_t n,
                                      double p_recov,
                                      double *out_theta);

/**
 * Runs the ABC chain against `observed` (`len` integral daily counts) and
 * writes the posterior-median point estimate
 * `{c_rate, p_recov, p_tran, r0}` into `out_estimate[4]`.
 */
EpicalibStatus epicalib_abc_calibrate(const double *observed,
                                      size_t len,
                                      const EpicalibAbcSpec *spec,
                                      double *out_estimate);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EPICALIB_H */
