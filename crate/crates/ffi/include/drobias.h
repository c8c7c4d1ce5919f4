#ifndef DROBIAS_H
#define DROBIAS_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum DrobiasStatus {
  DROBIAS_STATUS_OK = 0,
  DROBIAS_STATUS_NULL_ARGUMENT = 1,
  DROBIAS_STATUS_INVALID_ARGUMENT = 2,
  DROBIAS_STATUS_IO = 3,
  DROBIAS_STATUS_PARSE = 4,
  DROBIAS_STATUS_CHECKPOINT = 5,
  DROBIAS_STATUS_VOCABULARY = 6,
  DROBIAS_STATUS_NUMERIC = 7,
  DROBIAS_STATUS_BUFFER_TOO_SMALL = 8,
  DROBIAS_STATUS_PANIC = 9,
} DrobiasStatus;

/**
 * Aggregators that need no state between batches.
 */
typedef enum DrobiasAggregator {
  DROBIAS_AGGREGATOR_ERM = 0,
  DROBIAS_AGGREGATOR_GROUP_FREQUENCY = 1,
  DROBIAS_AGGREGATOR_GROUP_WORST = 2,
  DROBIAS_AGGREGATOR_TOPIC_CVAR = 3,
  DROBIAS_AGGREGATOR_TOPK = 4,
  DROBIAS_AGGREGATOR_TOPK_GROUP = 5,
} DrobiasAggregator;

/**
 * A loaded encoder and its vocabulary.
 */
typedef struct DrobiasModel DrobiasModel;

typedef struct DrobiasStereoScores {
  double lms;
  double ss;
  double icat;
} DrobiasStereoScores;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *drobias_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *drobias_version(void);

/**
 * Aggregates `n` per-example losses into one batch loss.
 *
 * `labels` holds group ids for the group kinds and topic ids for
 * `TopicCvar`, each below `num_labels`; it may be null for `Erm` and
 * `Topk`. `k` is used by the top-k kinds and `alpha` by `TopicCvar`.
 * When `out_coefficients` is not null it receives the `n` per-example
 * weights of the result.
 *
 * # Safety
 * Pointers must be valid for `n` elements or null where allowed.
 */
enum DrobiasStatus drobias_aggregate(enum DrobiasAggregator kind,
                                     const double *losses,
                                     const uint32_t *labels,
                                     size_t n,
                                     size_t num_labels,
                                     size_t k,
                                     double alpha,
                                     double *out_value,
                                     double *out_coefficients);

double drobias_icat(double lms, double ss);

/**
 * StereoSet-style scores from `n` rows of candidate log-probabilities laid
 * out as `(stereotypical, anti-stereotypical, unrelated)`.
 *
 * # Safety
 * `candidates` must hold `3 * n` values.
 */
enum DrobiasStatus drobias_stereo_scores(const double *candidates,
                                         size_t n,
                                         struct DrobiasStereoScores *out);

/**
 * SEAT effect size for four sets of `dim`-wide row-major embeddings.
 * `out_degenerate` is set when the spread is zero or an embedding is zero.
 *
 * # Safety
 * Each set pointer must hold `count * dim` floats.
 */
enum DrobiasStatus drobias_seat_effect_size(const float *x,
                                            size_t nx,
                                            const float *y,
                                            size_t ny,
                                            const float *a,
                                            size_t na,
                                            const float *b,
                                            size_t nb,
                                            size_t dim,
                                            double *out_effect,
                                            bool *out_degenerate);

/**
 * Loads a checkpoint written by `drobias train`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out_model` writable.
 */
enum DrobiasStatus drobias_model_load(const char *path, struct DrobiasModel **out_model);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must come from [`drobias_model_load`] and not be used afterwards.
 */
void drobias_model_free(struct DrobiasModel *model);

/**
 * Number of output classes, or 0 for a null model.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t drobias_model_vocab_size(const struct DrobiasModel *model);

/**
 * Width of sentence embeddings, or 0 for a null model.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t drobias_model_embedding_dim(const struct DrobiasModel *model);

/**
 * Token ids of whitespace-separated `text`. If `capacity` is too small the
 * call fails with `BufferTooSmall` and `out_len` holds the needed size.
 *
 * # Safety
 * `out_ids` must hold `capacity` values.
 */
enum DrobiasStatus drobias_model_encode(const struct DrobiasModel *model,
                                        const char *text,
                                        uint32_t *out_ids,
                                        size_t capacity,
                                        size_t *out_len);

/**
 * Log-probabilities over the vocabulary with `position` masked.
 *
 * # Safety
 * `ids` must hold `n` values and `out` at least `capacity`.
 */
enum DrobiasStatus drobias_model_masked_log_probs(const struct DrobiasModel *model,
                                                  const uint32_t *ids,
                                                  size_t n,
                                                  size_t position,
                                                  float *out,
                                                  size_t capacity);

/**
 * Mean-pooled final hidden state of a sentence.
 *
 * # Safety
 * `ids` must hold `n` values and `out` at least `capacity`.
 */
enum DrobiasStatus drobias_model_sentence_embedding(const struct DrobiasModel *model,
                                                    const uint32_t *ids,
                                                    size_t n,
                                                    float *out,
                                                    size_t capacity);

/**
 * Sum over `positions` of the log-probability of each token when it alone
 * is masked.
 *
 * # Safety
 * `ids` must hold `n` values and `positions` `m` values.
 */
enum DrobiasStatus drobias_model_pseudo_log_likelihood(const struct DrobiasModel *model,
                                                       const uint32_t *ids,
                                                       size_t n,
                                                       const size_t *positions,
                                                       size_t m,
                                                       double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DROBIAS_H */
