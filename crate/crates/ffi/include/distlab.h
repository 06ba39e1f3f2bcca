#ifndef DISTLAB_H
#define DISTLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes; the nonzero values match the `distlab` CLI exit codes.
 */
typedef enum DlStatus {
  DL_STATUS_OK = 0,
  DL_STATUS_PARSE = 2,
  DL_STATUS_PRECONDITION = 3,
  DL_STATUS_BUDGET = 4,
  DL_STATUS_ORACLE_CAP = 5,
  DL_STATUS_OVERFLOW = 6,
  DL_STATUS_NON_CONVERGENCE = 7,
  DL_STATUS_IO = 8,
  DL_STATUS_CHECK_FAILED = 9,
  DL_STATUS_REGRESSION = 10,
  /**
   * A required pointer argument was null.
   */
  DL_STATUS_NULL_ARGUMENT = 20,
  /**
   * The library panicked; this is a bug.
   */
  DL_STATUS_INTERNAL = 21,
} DlStatus;

/**
 * A deduplicated set of lattice points.
 */
typedef struct DlPointSet DlPointSet;

/**
 * The distance spectrum of a point set, sorted by key.
 */
typedef struct DlSpectrum DlSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *dl_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dl_version(void);

/**
 * Parses a point-set JSON document (`{"lattice": ..., "points": [[u1,u2],...]}`).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum DlStatus dl_pointset_from_json(const char *json, struct DlPointSet **out);

/**
 * Builds a point set on a built-in lattice (`Z2`, `hex`, `hex-unimodular`)
 * from `n` coordinate pairs laid out as `u1, u2, u1, u2, ...`.
 *
 * # Safety
 * `lattice` must be a NUL-terminated string, `coords` must point to `2 n`
 * readable values, and `out` must be writable.
 */
enum DlStatus dl_pointset_from_coords(const char *lattice,
                                      const int64_t *coords,
                                      size_t n,
                                      struct DlPointSet **out);

/**
 * Number of distinct points; zero for a null handle.
 *
 * # Safety
 * `set` must be null or a live handle.
 */
size_t dl_pointset_len(const struct DlPointSet *set);

/**
 * # Safety
 * `set` must be null or a handle not yet freed.
 */
void dl_pointset_free(struct DlPointSet *set);

/**
 * Exact distance spectrum; needs at least two points.
 *
 * # Safety
 * `set` must be a live handle and `out` writable.
 */
enum DlStatus dl_spectrum_compute(const struct DlPointSet *set, struct DlSpectrum **out);

/**
 * Number of distinct distances `k`; zero for a null handle.
 *
 * # Safety
 * `spec` must be null or a live handle.
 */
size_t dl_spectrum_len(const struct DlSpectrum *spec);

/**
 * Entry `i` in increasing key order: the form value `key` (squared distance
 * divided by the lattice scale) and the ordered-pair multiplicity `m`.
 *
 * # Safety
 * `spec` must be a live handle; `key` and `m` must be writable.
 */
enum DlStatus dl_spectrum_entry(const struct DlSpectrum *spec,
                                size_t i,
                                uint64_t *key,
                                uint64_t *m);

/**
 * # Safety
 * `spec` must be null or a handle not yet freed.
 */
void dl_spectrum_free(struct DlSpectrum *spec);

/**
 * Additive energy including the diagonal. Fails with `Overflow` above `2^64 - 1`.
 *
 * # Safety
 * `set` must be a live handle and `out` writable.
 */
enum DlStatus dl_additive_energy(const struct DlPointSet *set, uint64_t *out);

/**
 * Classifies a point set and writes the report as JSON. `config_json` may be
 * null for the default constants.
 *
 * # Safety
 * `set` must be a live handle, `config_json` null or NUL-terminated, and
 * `out` writable. The string written to `out` must be released with
 * [`dl_string_free`].
 */
enum DlStatus dl_classify_json(const struct DlPointSet *set, const char *config_json, char **out);

/**
 * Re-verifies a classification report from its embedded points. Returns
 * `CheckFailed` when any claimed count disagrees.
 *
 * # Safety
 * `report_json` must be NUL-terminated.
 */
enum DlStatus dl_verify_report_json(const char *report_json);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void dl_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DISTLAB_H */
