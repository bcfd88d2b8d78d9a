#ifndef CHAINLOCK_H
#define CHAINLOCK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ChainlockKind {
  CHAINLOCK_KIND_TANGLE = 0,
  CHAINLOCK_KIND_TEN_CHAIN = 1,
  CHAINLOCK_KIND_FULL = 2,
} ChainlockKind;

typedef enum ChainlockStatus {
  CHAINLOCK_STATUS_OK = 0,
  CHAINLOCK_STATUS_NULL_POINTER = 1,
  CHAINLOCK_STATUS_INVALID_ARGUMENT = 2,
  CHAINLOCK_STATUS_INFEASIBLE = 3,
  CHAINLOCK_STATUS_PARSE = 4,
  CHAINLOCK_STATUS_PREDICATE_FAILED = 5,
  CHAINLOCK_STATUS_PLANNER = 6,
  CHAINLOCK_STATUS_PANIC = 7,
} ChainlockStatus;

/**
 * Opaque scene handle.
 */
typedef struct ChainlockScene ChainlockScene;

/**
 * Result of one planner run.
 */
typedef struct ChainlockUnlockResult {
  bool separated;
  uint64_t iterations;
  double best_separation;
} ChainlockUnlockResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next library call on the same thread.
 */
const char *chainlock_last_error(void);

/**
 * Build a scene. `side` and `leg` are ignored for kinds that do not use them.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum ChainlockStatus chainlock_generate(enum ChainlockKind kind,
                                        double epsilon,
                                        double side,
                                        double leg,
                                        struct ChainlockScene **out);

/**
 * Parse a scene from NUL-terminated JSON.
 *
 * # Safety
 * `json` must be a valid C string and `out` valid storage for one handle.
 */
enum ChainlockStatus chainlock_scene_from_json(const char *json, struct ChainlockScene **out);

/**
 * Serialize a scene. The string is freed with `chainlock_string_free`.
 *
 * # Safety
 * `scene` must be a live handle and `out` valid storage for one pointer.
 */
enum ChainlockStatus chainlock_scene_to_json(const struct ChainlockScene *scene, char **out);

/**
 * Number of joints over all chains.
 *
 * # Safety
 * `scene` must be null or a live handle.
 */
uintptr_t chainlock_scene_joint_count(const struct ChainlockScene *scene);

/**
 * Run every construction predicate. Returns `PredicateFailed` with the
 * failing names in the last error when any fails.
 *
 * # Safety
 * `scene` must be a live handle.
 */
enum ChainlockStatus chainlock_validate(const struct ChainlockScene *scene);

/**
 * One planner run with the default goal bias and separation radius.
 *
 * # Safety
 * `scene` must be a live handle and `out` valid storage for one result.
 */
enum ChainlockStatus chainlock_unlock(const struct ChainlockScene *scene,
                                      uint64_t budget,
                                      double step,
                                      uint64_t seed,
                                      struct ChainlockUnlockResult *out);

/**
 * Release a scene handle. Null is ignored.
 *
 * # Safety
 * `scene` must be null or a handle not yet freed.
 */
void chainlock_scene_free(struct ChainlockScene *scene);

/**
 * Release a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void chainlock_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHAINLOCK_H */
