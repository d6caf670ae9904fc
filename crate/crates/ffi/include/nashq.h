#ifndef NASHQ_H
#define NASHQ_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NashqStatus {
  NASHQ_STATUS_OK = 0,
  NASHQ_STATUS_NULL_POINTER = 1,
  NASHQ_STATUS_INVALID_INPUT = 2,
  NASHQ_STATUS_CONFIG = 3,
  NASHQ_STATUS_SOLVER = 4,
  NASHQ_STATUS_NUMERICAL = 5,
  NASHQ_STATUS_IO = 6,
  NASHQ_STATUS_JSON = 7,
  /**
   * A Rust panic was caught at the boundary.
   */
  NASHQ_STATUS_INTERNAL = 8,
} NashqStatus;

/**
 * A stochastic game.
 */
typedef struct NashqGame NashqGame;

/**
 * One stationary strategy per state for each player.
 */
typedef struct NashqProfile NashqProfile;

typedef struct NashqCertificate {
  double gap_1;
  double gap_2;
  double tolerance;
  bool passed;
} NashqCertificate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string. Do not free.
 */
const char *nashq_version(void);

/**
 * Message of the last failed call on this thread, or NULL after a success.
 * The caller owns the copy and frees it with `nashq_string_free`.
 */
char *nashq_last_error_message(void);

/**
 * # Safety
 * `s` is NULL or a string returned by this library that has not been freed.
 */
void nashq_string_free(char *s);

/**
 * Parse a game document.
 *
 * # Safety
 * `json` is a NUL-terminated string; `out` is writable.
 */
enum NashqStatus nashq_game_from_json(const char *json, struct NashqGame **out);

/**
 * Load a game document from a file.
 *
 * # Safety
 * `path` is a NUL-terminated string; `out` is writable.
 */
enum NashqStatus nashq_game_load(const char *path, struct NashqGame **out);

/**
 * Seeded random game with `d1` and `d2` actions, `d_s` states, reward
 * correlation `h` and discount factors `gamma_1`, `gamma_2`.
 *
 * # Safety
 * `out` is writable.
 */
enum NashqStatus nashq_game_random(size_t d1,
                                   size_t d2,
                                   size_t d_s,
                                   double h,
                                   double gamma_1,
                                   double gamma_2,
                                   uint64_t seed,
                                   struct NashqGame **out);

/**
 * # Safety
 * `game` is NULL or a live handle; it must not be used afterwards.
 */
void nashq_game_free(struct NashqGame *game);

/**
 * # Safety
 * `game` is a live handle; `out` is writable.
 */
enum NashqStatus nashq_game_n_states(const struct NashqGame *game, size_t *out);

/**
 * Action count of `player` (1 or 2).
 *
 * # Safety
 * `game` is a live handle; `out` is writable.
 */
enum NashqStatus nashq_game_n_actions(const struct NashqGame *game, uint32_t player, size_t *out);

/**
 * Serialize the game; free the result with `nashq_string_free`.
 *
 * # Safety
 * `game` is a live handle; `out` is writable.
 */
enum NashqStatus nashq_game_to_json(const struct NashqGame *game, char **out);

/**
 * Both players uniform at every state.
 *
 * # Safety
 * `game` is a live handle; `out` is writable.
 */
enum NashqStatus nashq_profile_uniform(const struct NashqGame *game, struct NashqProfile **out);

/**
 * Parse a profile as written under `strategies` in `tables.json`.
 *
 * # Safety
 * `json` is a NUL-terminated string; `out` is writable.
 */
enum NashqStatus nashq_profile_from_json(const char *json, struct NashqProfile **out);

/**
 * # Safety
 * `profile` is a live handle; `out` is writable.
 */
enum NashqStatus nashq_profile_to_json(const struct NashqProfile *profile, char **out);

/**
 * Copy the strategy of `player` at `state` into `buf`, which holds `len`
 * doubles. `written` receives the number of actions; if `len` is too small
 * nothing is copied and the call fails with `NASHQ_STATUS_INVALID_INPUT`.
 *
 * # Safety
 * `profile` is a live handle; `buf` holds `len` doubles; `written` is writable.
 */
enum NashqStatus nashq_profile_strategy(const struct NashqProfile *profile,
                                        uint32_t player,
                                        size_t state,
                                        double *buf,
                                        size_t len,
                                        size_t *written);

/**
 * # Safety
 * `profile` is NULL or a live handle; it must not be used afterwards.
 */
void nashq_profile_free(struct NashqProfile *profile);

/**
 * Both players learn with partial information for `n_steps`. A positive
 * `stair_width` selects the stair learning rate, zero the per-visit rate.
 *
 * # Safety
 * `game` is a live handle; `out` is writable.
 */
enum NashqStatus nashq_run_partial_info(const struct NashqGame *game,
                                        uint64_t n_steps,
                                        uint64_t stair_width,
                                        uint64_t seed,
                                        struct NashqProfile **out);

/**
 * Exact best-response gaps of `profile` in `game`.
 *
 * # Safety
 * `game` and `profile` are live handles; `out` is writable.
 */
enum NashqStatus nashq_certify(const struct NashqGame *game,
                               const struct NashqProfile *profile,
                               double tol,
                               struct NashqCertificate *out);

/**
 * Run the experiment described by the config file and write its artifacts
 * to `out_dir`. `out` receives the final certificate.
 *
 * # Safety
 * `config_path` and `out_dir` are NUL-terminated strings; `out` is NULL or writable.
 */
enum NashqStatus nashq_run_experiment(const char *config_path,
                                      const char *out_dir,
                                      struct NashqCertificate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NASHQ_H */
