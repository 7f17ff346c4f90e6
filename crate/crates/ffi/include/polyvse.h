#ifndef POLYVSE_H
#define POLYVSE_H

#include <stddef.h>
#include <stdint.h>

typedef enum PvStatus {
  PV_STATUS_OK = 0,
  // Null pointer, bad UTF-8 or a size that does not fit.
  PV_STATUS_INVALID_ARGUMENT = 1,
  PV_STATUS_CONFIG = 2,
  PV_STATUS_PARSE = 3,
  PV_STATUS_IO = 4,
  PV_STATUS_INCOMPATIBLE = 5,
  // Dimension mismatch, degenerate input or divergence.
  PV_STATUS_NUMERIC = 6,
  // A bug: a panic was caught at the boundary.
  PV_STATUS_INTERNAL = 7,
} PvStatus;

// A loaded or generated corpus.
typedef struct PvCorpus PvCorpus;

// A trained model with its vocabulary.
typedef struct PvModel PvModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer is
// valid until the next call into the library on this thread.
const char *pv_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *pv_version(void);

// Generates a synthetic corpus with default sizes. `regime` is
// "translation", "comparable" or "disjoint"; `languages` is a comma
// separated list such as "en,de".
//
// # Safety
// String arguments must be NUL-terminated; `out` must be writable.
enum PvStatus pv_synth_generate(const char *regime,
                                const char *languages,
                                uint64_t seed,
                                struct PvCorpus **out);

// Loads `captions.tsv`, `features.imgf` and `features.index` from `dir`.
//
// # Safety
// `dir` must be NUL-terminated; `out` must be writable.
enum PvStatus pv_corpus_load(const char *dir, struct PvCorpus **out);

// Writes the corpus files into an existing directory.
//
// # Safety
// `corpus` must come from this library; `dir` must be NUL-terminated.
enum PvStatus pv_corpus_save(const struct PvCorpus *corpus, const char *dir);

// Image count, caption count and feature dimension.
//
// # Safety
// `corpus` must come from this library; out pointers may be null.
enum PvStatus pv_corpus_counts(const struct PvCorpus *corpus,
                               size_t *images,
                               size_t *captions,
                               size_t *feature_dim);

// # Safety
// `corpus` must be null or come from this library, and not be used again.
void pv_corpus_free(struct PvCorpus *corpus);

// Loads a checkpoint directory written by `polyvse train`.
//
// # Safety
// `dir` must be NUL-terminated; `out` must be writable.
enum PvStatus pv_model_load(const char *dir, struct PvModel **out);

// Embedding size and expected image feature size.
//
// # Safety
// `model` must come from this library; out pointers may be null.
enum PvStatus pv_model_dims(const struct PvModel *model,
                            size_t *embedding_dim,
                            size_t *feature_dim);

// Embeds a whitespace-tokenized caption into `out[0..embedding_dim]`.
// Unknown tokens map to the UNK entry.
//
// # Safety
// `model` must come from this library; `text` must be NUL-terminated;
// `out` must hold `out_len` floats.
enum PvStatus pv_model_encode_caption(const struct PvModel *model,
                                      const char *text,
                                      float *out,
                                      size_t out_len);

// Embeds `n` images whose features are stored row-major in `features`
// (`n * feature_dim` floats) into `out` (`n * embedding_dim` floats).
//
// # Safety
// `model` must come from this library; buffers must hold the stated sizes.
enum PvStatus pv_model_encode_images(const struct PvModel *model,
                                     const float *features,
                                     size_t n,
                                     size_t feature_dim,
                                     float *out,
                                     size_t out_len);

// # Safety
// `model` must be null or come from this library, and not be used again.
void pv_model_free(struct PvModel *model);

// Max-of-hinges (`sum_of_hinges == 0`) or sum-of-hinges ranking loss of an
// `n x n` row-major similarity matrix whose diagonal holds the positive
// pairs. Writes the loss and, if `grad` is not null, its gradient.
//
// # Safety
// `similarity` and `grad` (when not null) must hold `n * n` doubles.
enum PvStatus pv_ranking_loss(const double *similarity,
                              size_t n,
                              double margin,
                              int32_t sum_of_hinges,
                              double *loss,
                              double *grad);

// Percentage of queries whose correct candidate (`truth[q]`) ranks within
// the top `k` of row `q` of the `n_queries x n_candidates` score matrix.
// Ties rank the lower candidate index first.
//
// # Safety
// `scores` must hold `n_queries * n_candidates` doubles, `truth`
// `n_queries` indices.
enum PvStatus pv_recall_at_k(const double *scores,
                             size_t n_queries,
                             size_t n_candidates,
                             const size_t *truth,
                             size_t k,
                             double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POLYVSE_H */
