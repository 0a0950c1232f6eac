#ifndef WHITEBOX_CA_H
#define WHITEBOX_CA_H

#include <stdbool.h>
#include <stdint.h>

#define WCA_TRACE_OFF 0

#define WCA_TRACE_RULES_ONLY 1

#define WCA_TRACE_FULL 2

/**
 * Passed as `fixed_state` for a periodic boundary.
 */
#define WCA_PERIODIC -1

typedef enum WcaStatus {
  WCA_STATUS_OK = 0,
  WCA_STATUS_NULL_POINTER = 1,
  WCA_STATUS_CONFIG = 2,
  WCA_STATUS_RUNTIME = 3,
  WCA_STATUS_UNSUPPORTED = 4,
  WCA_STATUS_INVALID_UTF8 = 5,
  WCA_STATUS_PANIC = 6,
} WcaStatus;

typedef struct WcaLattice WcaLattice;

typedef struct WcaRuleSet WcaRuleSet;

typedef struct WcaSimulation WcaSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, static storage.
 */
const char *wca_version(void);

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call on the same thread.
 */
const char *wca_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void wca_string_free(char *s);

/**
 * # Safety
 * `text` must be a nul-terminated string; `out` must be writable.
 */
enum WcaStatus wca_ruleset_parse(const char *text, struct WcaRuleSet **out);

/**
 * # Safety
 * `out` must be writable.
 */
enum WcaStatus wca_ruleset_life(struct WcaRuleSet **out);

/**
 * # Safety
 * `rules` must be null or a live handle.
 */
void wca_ruleset_free(struct WcaRuleSet *rules);

/**
 * # Safety
 * `rules` must be a live handle; `out` must be writable.
 */
enum WcaStatus wca_ruleset_state_count(const struct WcaRuleSet *rules, uint32_t *out);

/**
 * # Safety
 * `rules` must be a live handle, `name` a nul-terminated string, `out` writable.
 */
enum WcaStatus wca_ruleset_state_id(const struct WcaRuleSet *rules, const char *name, uint8_t *out);

/**
 * Canonical `.car` text. Free with `wca_string_free`.
 *
 * # Safety
 * `rules` must be a live handle; `out` must be writable.
 */
enum WcaStatus wca_ruleset_to_text(const struct WcaRuleSet *rules, char **out);

/**
 * A lattice filled with `fill`. `fixed_state` is a state id for a fixed
 * boundary or `WCA_PERIODIC`.
 *
 * # Safety
 * `rules` must be a live handle; `out` must be writable.
 */
enum WcaStatus wca_lattice_new(const struct WcaRuleSet *rules,
                               uint32_t width,
                               uint32_t height,
                               bool hex,
                               int32_t fixed_state,
                               uint8_t fill,
                               struct WcaLattice **out);

/**
 * # Safety
 * `lattice` must be null or a live handle.
 */
void wca_lattice_free(struct WcaLattice *lattice);

/**
 * # Safety
 * `lattice` must be a live handle.
 */
enum WcaStatus wca_lattice_set(struct WcaLattice *lattice,
                               uint32_t row,
                               uint32_t col,
                               uint8_t state);

/**
 * # Safety
 * `lattice` must be a live handle; `out` must be writable.
 */
enum WcaStatus wca_lattice_get(const struct WcaLattice *lattice,
                               uint32_t row,
                               uint32_t col,
                               uint8_t *out);

/**
 * # Safety
 * `lattice` must be a live handle; `out` must be writable.
 */
enum WcaStatus wca_lattice_count(const struct WcaLattice *lattice, uint8_t state, uint64_t *out);

/**
 * # Safety
 * `lattice` must be a live handle; `out` must be writable.
 */
enum WcaStatus wca_lattice_digest(const struct WcaLattice *lattice, uint64_t *out);

/**
 * Snapshot text of the lattice. Free with `wca_string_free`.
 *
 * # Safety
 * `lattice` must be a live handle; `out` must be writable.
 */
enum WcaStatus wca_lattice_to_text(const struct WcaLattice *lattice, char **out);

/**
 * Starts a simulation from a copy of `initial`. `workers` 0 means one.
 *
 * # Safety
 * `rules` and `initial` must be live handles; `out` must be writable.
 */
enum WcaStatus wca_simulation_new(const struct WcaRuleSet *rules,
                                  const struct WcaLattice *initial,
                                  uint32_t trace_mode,
                                  uint32_t workers,
                                  struct WcaSimulation **out);

/**
 * # Safety
 * `sim` must be null or a live handle.
 */
void wca_simulation_free(struct WcaSimulation *sim);

/**
 * # Safety
 * `sim` must be a live handle.
 */
enum WcaStatus wca_simulation_step(struct WcaSimulation *sim, uint32_t iterations);

/**
 * # Safety
 * `sim` must be a live handle; `out` must be writable.
 */
enum WcaStatus wca_simulation_iteration(const struct WcaSimulation *sim, uint32_t *out);

/**
 * Copy of the current generation, a new handle.
 *
 * # Safety
 * `sim` must be a live handle; `out` must be writable.
 */
enum WcaStatus wca_simulation_lattice(const struct WcaSimulation *sim, struct WcaLattice **out);

/**
 * Trace text so far. Free with `wca_string_free`.
 *
 * # Safety
 * `sim` must be a live handle; `out` must be writable.
 */
enum WcaStatus wca_simulation_trace(const struct WcaSimulation *sim, char **out);

/**
 * Causal chain of `(row, col)` at `iteration` as JSON. Needs a full trace.
 * Free with `wca_string_free`.
 *
 * # Safety
 * `sim` must be a live handle; `out` must be writable.
 */
enum WcaStatus wca_simulation_explain(const struct WcaSimulation *sim,
                                      uint32_t row,
                                      uint32_t col,
                                      uint32_t iteration,
                                      uint32_t depth,
                                      char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WHITEBOX_CA_H */
