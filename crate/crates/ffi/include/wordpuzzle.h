#ifndef WORDPUZZLE_H
#define WORDPUZZLE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum WpStatus {
  WP_STATUS_OK = 0,
  WP_STATUS_NULL_ARGUMENT = 1,
  WP_STATUS_INVALID_UTF8 = 2,
  WP_STATUS_IO = 3,
  WP_STATUS_FORMAT = 4,
  WP_STATUS_INVALID_INPUT = 5,
  WP_STATUS_INVARIANT = 6,
  WP_STATUS_PANIC = 7,
} WpStatus;

/**
 * ESA relatedness index with its pair memo.
 */
typedef struct WpSimilarityIndex WpSimilarityIndex;

/**
 * Fitted topic model.
 */
typedef struct WpTopicModel WpTopicModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *wp_last_error(void);

/**
 * Library version as a static string.
 */
const char *wp_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void wp_string_free(char *s);

/**
 * Loads an index written by `wordpuzzle index`.
 *
 * # Safety
 * `path` must be a valid C string; `out` must be writable.
 */
enum WpStatus wp_index_load(const char *path, struct WpSimilarityIndex **out);

/**
 * # Safety
 * `index` must come from [`wp_index_load`] and not be used afterwards.
 */
void wp_index_free(struct WpSimilarityIndex *index);

/**
 * Relatedness of two words in [0, 1]. `unindexed` (optional) is set when
 * either word is missing from the index, in which case the value is 0.
 *
 * # Safety
 * Pointers must be valid; `unindexed` may be null.
 */
enum WpStatus wp_index_relatedness(const struct WpSimilarityIndex *index,
                                   const char *a,
                                   const char *b,
                                   double *out,
                                   bool *unindexed);

/**
 * Bottleneck consistency score of `n` words under the index.
 *
 * # Safety
 * `words` must point to `n` valid C strings.
 */
enum WpStatus wp_index_bottleneck(const struct WpSimilarityIndex *index,
                                  const char *const *words,
                                  size_t n,
                                  double *out);

/**
 * Bottleneck score of a complete graph given as a row-major symmetric
 * `n` x `n` weight matrix with entries in [0, 1].
 *
 * # Safety
 * `weights` must point to `n * n` doubles.
 */
enum WpStatus wp_bottleneck_score(const double *weights, size_t n, double *out);

/**
 * Loads a model written by `wordpuzzle train`.
 *
 * # Safety
 * `path` must be a valid C string; `out` must be writable.
 */
enum WpStatus wp_model_load(const char *path, struct WpTopicModel **out);

/**
 * # Safety
 * `model` must come from [`wp_model_load`] and not be used afterwards.
 */
void wp_model_free(struct WpTopicModel *model);

/**
 * Number of topics, or 0 for a null model.
 *
 * # Safety
 * `model` must be null or valid.
 */
size_t wp_model_topics(const struct WpTopicModel *model);

/**
 * The `k` most significant words of `topic`, newline separated. Free the
 * result with [`wp_string_free`].
 *
 * # Safety
 * `model` must be valid; `out` must be writable.
 */
enum WpStatus wp_model_topic_words(const struct WpTopicModel *model,
                                   size_t topic,
                                   size_t k,
                                   char **out);

/**
 * Writes the consistent sets of the model (top `k` words per topic, score
 * strictly above `delta`) to `out_path` as JSON lines and reports how many
 * there were.
 *
 * # Safety
 * Pointers must be valid; `n_sets` may be null.
 */
enum WpStatus wp_extract_consistent_sets(const struct WpTopicModel *model,
                                         const struct WpSimilarityIndex *index,
                                         size_t k,
                                         double delta,
                                         const char *out_path,
                                         size_t *n_sets);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WORDPUZZLE_H */
