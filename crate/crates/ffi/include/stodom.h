#ifndef STODOM_H
#define STODOM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum StodomStatus {
  STODOM_STATUS_OK = 0,
  STODOM_STATUS_INVALID_INPUT = 1,
  STODOM_STATUS_SIZE_LIMIT = 2,
  STODOM_STATUS_PRECONDITION = 3,
  STODOM_STATUS_ASSUMPTION_FAILED = 4,
  STODOM_STATUS_NO_LIFT = 5,
  STODOM_STATUS_FIXTURE_REGRESSION = 6,
  STODOM_STATUS_INTERNAL = 7,
  STODOM_STATUS_NULL_POINTER = 8,
  STODOM_STATUS_UTF8 = 9,
  STODOM_STATUS_PANIC = 10,
} StodomStatus;

/**
 * A coupling of two measures.
 */
typedef struct StodomCoupling StodomCoupling;

/**
 * A fibre map `A → B` with an optional distinguished section.
 */
typedef struct StodomFibreMap StodomFibreMap;

/**
 * A simple undirected graph.
 */
typedef struct StodomGraph StodomGraph;

/**
 * A probability measure on `[N]^sites`.
 */
typedef struct StodomMeasure StodomMeasure;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message on this thread, or null. Valid until the next call on this thread.
 */
const char *stodom_last_error(void);

/**
 * Library version as a static string.
 */
const char *stodom_version(void);

/**
 * # Safety
 * `s` must come from this library or be null.
 */
void stodom_string_free(char *s);

/**
 * Parses `{"sites": n, "label_bound": N, "weights": {"0,1": "1/2", ...}}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum StodomStatus stodom_measure_from_json(const char *json, struct StodomMeasure **out);

/**
 * # Safety
 * `m` must come from this library or be null.
 */
void stodom_measure_free(struct StodomMeasure *m);

/**
 * # Safety
 * `m` must be a live handle; `out` must be writable.
 */
enum StodomStatus stodom_measure_to_json(const struct StodomMeasure *m, char **out);

/**
 * # Safety
 * `m` must be a live handle; `out` must be writable.
 */
enum StodomStatus stodom_measure_sites(const struct StodomMeasure *m, size_t *out);

/**
 * Parses `{"A": n, "B": m, "pi": [...], "section": [...]}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum StodomStatus stodom_fibre_map_from_json(const char *json, struct StodomFibreMap **out);

/**
 * # Safety
 * `pm` must come from this library or be null.
 */
void stodom_fibre_map_free(struct StodomFibreMap *pm);

/**
 * Writes whether `mu` is stochastically dominated by `rho`. When it is and
 * `coupling` is non-null, a monotone coupling is returned there.
 *
 * # Safety
 * Handles must be live; `out` must be writable; `coupling` may be null.
 */
enum StodomStatus stodom_dominates(const struct StodomMeasure *mu,
                                   const struct StodomMeasure *rho,
                                   bool *out,
                                   struct StodomCoupling **coupling);

/**
 * The constructive coupling of a lift `mu` below `rho` under the column assumptions.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum StodomStatus stodom_main_coupling(const struct StodomMeasure *mu,
                                       const struct StodomMeasure *rho,
                                       const struct StodomFibreMap *pm,
                                       struct StodomCoupling **out);

/**
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum StodomStatus stodom_coupling_is_monotone(const struct StodomCoupling *c,
                                              const struct StodomMeasure *mu,
                                              const struct StodomMeasure *rho,
                                              bool *out);

/**
 * # Safety
 * `c` must be a live handle; `out` must be writable.
 */
enum StodomStatus stodom_coupling_to_json(const struct StodomCoupling *c, char **out);

/**
 * # Safety
 * `c` must come from this library or be null.
 */
void stodom_coupling_free(struct StodomCoupling *c);

/**
 * Parses `"V E"` followed by one `"u v"` line per edge.
 *
 * # Safety
 * `source` must be a NUL-terminated string; `out` must be writable.
 */
enum StodomStatus stodom_graph_parse(const char *source, struct StodomGraph **out);

/**
 * # Safety
 * `g` must come from this library or be null.
 */
void stodom_graph_free(struct StodomGraph *g);

/**
 * Exact probability that the open cluster of `probe` reaches graph
 * distance `radius`, as a reduced fraction string. `site` selects site
 * percolation, otherwise bond.
 *
 * # Safety
 * `g` must be a live handle, `p` a NUL-terminated string, `out` writable.
 */
enum StodomStatus stodom_reach_exact(const struct StodomGraph *g,
                                     bool site,
                                     const char *p,
                                     size_t probe,
                                     size_t radius,
                                     char **out);

/**
 * Runs a command-line invocation (without the program name) and returns its
 * standard output and exit code.
 *
 * # Safety
 * `argv` must point to `argc` NUL-terminated strings; `out` and `code` must be writable.
 */
enum StodomStatus stodom_cli_run(const char *const *argv, size_t argc, char **out, int32_t *code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STODOM_H */
