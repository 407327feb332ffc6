#ifndef NOARB_H
#define NOARB_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a call.
 */
typedef enum NoarbStatus {
  NOARB_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  NOARB_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  NOARB_STATUS_INVALID_UTF8 = 2,
  /**
   * The model text or file could not be read or parsed.
   */
  NOARB_STATUS_PARSE_ERROR = 3,
  /**
   * The model was rejected by the existence gate or the tilt check.
   */
  NOARB_STATUS_MODEL_REJECTED = 4,
  /**
   * The requested name or argument is not recognised.
   */
  NOARB_STATUS_INVALID_ARGUMENT = 5,
  /**
   * The simulation could not run.
   */
  NOARB_STATUS_SIMULATION_ERROR = 6,
  /**
   * A report could not be serialized.
   */
  NOARB_STATUS_SERIALIZE_ERROR = 7,
  /**
   * An internal error; the handle arguments are left untouched.
   */
  NOARB_STATUS_PANIC = 8,
} NoarbStatus;

/**
 * Three-valued verdict.
 */
typedef enum NoarbTruth {
  NOARB_TRUTH_FAILS = 0,
  NOARB_TRUTH_HOLDS = 1,
  NOARB_TRUTH_UNKNOWN = 2,
} NoarbTruth;

/**
 * Opaque model handle.
 */
typedef struct NoarbModel NoarbModel;

/**
 * Opaque report handle.
 */
typedef struct NoarbReport NoarbReport;

/**
 * Simulation settings. `boundary_eps <= 0` selects the default, and
 * `threads == 0` uses every core.
 */
typedef struct NoarbSimConfig {
  size_t n_paths;
  double dt;
  double horizon;
  uint64_t seed;
  double boundary_eps;
  double z_level;
  size_t threads;
} NoarbSimConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a model from the text of a model file.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum NoarbStatus noarb_model_from_text(const char *text, struct NoarbModel **out);

/**
 * Reads and parses a model file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum NoarbStatus noarb_model_from_file(const char *path, struct NoarbModel **out);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must be null or a handle from `noarb_model_from_*` not yet freed.
 */
void noarb_model_free(struct NoarbModel *model);

/**
 * Classifies a model. `anchor` is the scale anchor, or NaN for `x0`;
 * a nonzero `numeric_only` skips the symbolic asymptotics.
 *
 * # Safety
 * `model` must be a live model handle and `out` a valid pointer.
 */
enum NoarbStatus noarb_analyze(const struct NoarbModel *model,
                               double anchor,
                               int numeric_only,
                               struct NoarbReport **out);

/**
 * Releases a report. Null is ignored.
 *
 * # Safety
 * `report` must be null or a handle from `noarb_analyze` not yet freed.
 */
void noarb_report_free(struct NoarbReport *report);

/**
 * Looks up a headline verdict by name, e.g. `nflvr_finite_t`,
 * `nra_finite_t` or `z_martingale`.
 *
 * # Safety
 * `report` must be a live report handle, `name` a NUL-terminated string
 * and `out` a valid pointer.
 */
enum NoarbStatus noarb_report_verdict(const struct NoarbReport *report,
                                      const char *name,
                                      enum NoarbTruth *out);

/**
 * 1 when some headline verdict is Unknown, 0 otherwise, -1 on a null
 * handle.
 *
 * # Safety
 * `report` must be null or a live report handle.
 */
int noarb_report_has_unknown(const struct NoarbReport *report);

/**
 * Number of failed simulation cross-checks; 0 when none were run, -1 on
 * a null handle.
 *
 * # Safety
 * `report` must be null or a live report handle.
 */
int noarb_report_flag_count(const struct NoarbReport *report);

/**
 * Serializes the report as JSON.
 *
 * # Safety
 * `report` must be a live report handle and `out` a valid pointer.
 */
enum NoarbStatus noarb_report_to_json(const struct NoarbReport *report, char **out);

/**
 * Renders the report as text, including the simulation section when one
 * is attached.
 *
 * # Safety
 * `report` must be a live report handle and `out` a valid pointer.
 */
enum NoarbStatus noarb_report_to_text(const struct NoarbReport *report, char **out);

/**
 * Simulates `model` and attaches the estimates and cross-checks to
 * `report`, which must come from the same model.
 *
 * # Safety
 * `model` and `report` must be live handles and `config` a valid pointer.
 */
enum NoarbStatus noarb_simulate(const struct NoarbModel *model,
                                const struct NoarbSimConfig *config,
                                struct NoarbReport *report);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void noarb_string_free(char *s);

/**
 * Message of the last failed call on this thread, or an empty string.
 * Valid until the next call into this library on the same thread.
 */
const char *noarb_last_error(void);

/**
 * Library version, a static string.
 */
const char *noarb_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NOARB_H */
