#ifndef SUPERHIGHWAY_H
#define SUPERHIGHWAY_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum ShxStatus {
  SHX_STATUS_OK = 0,
  SHX_STATUS_NULL_ARGUMENT = 1,
  SHX_STATUS_INVALID_UTF8 = 2,
  SHX_STATUS_PANIC = 3,
  SHX_STATUS_NOT_FOUND = 10,
  SHX_STATUS_INVALID_PARAM = 11,
  SHX_STATUS_EMPTY_SHARED_ITEMS = 12,
  SHX_STATUS_DOMAIN_MISMATCH = 13,
  SHX_STATUS_CAP_EXCEEDED = 14,
  SHX_STATUS_DIVERGENCE = 15,
  SHX_STATUS_EMPTY_EVAL_SET = 16,
  SHX_STATUS_INVALID_RANKING = 17,
  SHX_STATUS_COVERAGE = 18,
  SHX_STATUS_INGEST = 19,
  SHX_STATUS_EMPTY_DOMAIN = 20,
  SHX_STATUS_INVALID_GRAPH = 21,
  SHX_STATUS_ARTIFACT = 22,
  SHX_STATUS_IO = 23,
  SHX_STATUS_JSON = 24,
  SHX_STATUS_NO_SPLIT = 25,
  SHX_STATUS_BUFFER_TOO_SMALL = 26,
} ShxStatus;

typedef enum ShxStructureKind {
  SHX_STRUCTURE_KIND_SINGLE = 0,
  SHX_STRUCTURE_KIND_HIGHWAY = 1,
  SHX_STRUCTURE_KIND_SUPERHIGHWAY = 2,
} ShxStructureKind;

typedef enum ShxBackend {
  SHX_BACKEND_MF = 0,
  SHX_BACKEND_DEEP_WALK = 1,
  SHX_BACKEND_HPE = 2,
} ShxBackend;

typedef struct ShxModel ShxModel;

typedef struct ShxStructure ShxStructure;

/**
 * A cross-domain system, optionally carrying an evaluation split.
 */
typedef struct ShxSystem ShxSystem;

/**
 * Trainer settings. Obtain defaults from [`shx_train_config_default`].
 */
typedef struct ShxTrainConfig {
  size_t dims;
  size_t epochs;
  double learning_rate;
  double min_learning_rate;
  size_t negatives;
  size_t walks_per_node;
  size_t walk_length;
  size_t window;
  size_t hpe_walk_length;
  double regularization;
  uint64_t seed;
  size_t workers;
} ShxTrainConfig;

/**
 * Synthetic generator settings. Obtain defaults from
 * [`shx_synth_config_default`].
 */
typedef struct ShxSynthConfig {
  size_t users_s;
  size_t users_t;
  size_t items_s;
  size_t items_t;
  double overlap_ratio;
  size_t latent_dims;
  double interactions_per_user_s;
  double interactions_per_user_t;
  double noise;
  uint64_t seed;
} ShxSynthConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *shx_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void shx_string_free(char *s);

struct ShxTrainConfig shx_train_config_default(void);

struct ShxSynthConfig shx_synth_config_default(void);

/**
 * Reads two `user<TAB>item` files into a new system.
 *
 * # Safety
 * Paths must be NUL-terminated strings; `out` must be writable.
 */
enum ShxStatus shx_system_load_tsv(const char *source_path,
                                   const char *target_path,
                                   struct ShxSystem **out);

/**
 * Generates a synthetic system. A null `cfg` uses the defaults.
 *
 * # Safety
 * `cfg` must be null or valid; `out` must be writable.
 */
enum ShxStatus shx_system_synth(const struct ShxSynthConfig *cfg, struct ShxSystem **out);

/**
 * Loads a system artifact written by the `shx` tool or
 * [`shx_system_save`], including its split if present.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum ShxStatus shx_system_load(const char *path, struct ShxSystem **out);

/**
 * # Safety
 * `sys` must be a live handle; `path` a NUL-terminated string.
 */
enum ShxStatus shx_system_save(const struct ShxSystem *sys, const char *path);

/**
 * Holds out target-domain interactions in place. The system afterwards
 * contains only the training interactions and remembers the split for
 * [`shx_evaluate`].
 *
 * # Safety
 * `sys` must be a live handle.
 */
enum ShxStatus shx_system_split(struct ShxSystem *sys, double holdout_fraction, uint64_t seed);

/**
 * Per-domain counts as a JSON object; free with [`shx_string_free`].
 *
 * # Safety
 * `sys` must be a live handle; `out` must be writable.
 */
enum ShxStatus shx_system_stats_json(const struct ShxSystem *sys, char **out);

/**
 * # Safety
 * `sys` must be null or a handle from this library, freed at most once.
 */
void shx_system_free(struct ShxSystem *sys);

/**
 * Builds a training structure. `alpha` and `beta` are read only for
 * [`ShxStructureKind::Superhighway`].
 *
 * # Safety
 * `sys` must be a live handle; `out` must be writable.
 */
enum ShxStatus shx_structure_build(const struct ShxSystem *sys,
                                   enum ShxStructureKind kind,
                                   double alpha,
                                   double beta,
                                   struct ShxStructure **out);

/**
 * # Safety
 * `structure` must be a live handle; `path` a NUL-terminated string.
 */
enum ShxStatus shx_structure_save(const struct ShxStructure *structure, const char *path);

/**
 * Counts for the structure graph as JSON; free with [`shx_string_free`].
 *
 * # Safety
 * `structure` must be a live handle; `out` must be writable.
 */
enum ShxStatus shx_structure_stats_json(const struct ShxStructure *structure, char **out);

/**
 * # Safety
 * `structure` must be null or a handle from this library, freed at most once.
 */
void shx_structure_free(struct ShxStructure *structure);

/**
 * Trains embeddings on a structure. A null `cfg` uses the defaults.
 *
 * # Safety
 * `structure` must be a live handle; `cfg` null or valid; `out` writable.
 */
enum ShxStatus shx_model_train(const struct ShxStructure *structure,
                               enum ShxBackend backend,
                               const struct ShxTrainConfig *cfg,
                               struct ShxModel **out);

/**
 * Vector length of the model, 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t shx_model_dims(const struct ShxModel *model);

/**
 * Copies the vector of `node` (keys `su:<id>`, `tu:<id>` or `it:<id>`)
 * into `buf`, which must hold at least [`shx_model_dims`] values.
 *
 * # Safety
 * `model` must be a live handle; `node` a NUL-terminated string; `buf`
 * writable for `len` doubles.
 */
enum ShxStatus shx_model_vector(const struct ShxModel *model,
                                const char *node,
                                double *buf,
                                size_t len);

/**
 * # Safety
 * `model` must be null or a handle from this library, freed at most once.
 */
void shx_model_free(struct ShxModel *model);

/**
 * Scores `model` against the split stored in `sys` with cosine ranking
 * and one top-degree query per user. Writes MAP@k to `map_out` and, when
 * `report_out` is non-null, the full report as JSON.
 *
 * # Safety
 * Handles must be live; `map_out` writable; `report_out` null or writable.
 */
enum ShxStatus shx_evaluate(const struct ShxModel *model,
                            const struct ShxSystem *sys,
                            size_t k,
                            double *map_out,
                            char **report_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUPERHIGHWAY_H */
