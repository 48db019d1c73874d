#ifndef LEXPROB_H
#define LEXPROB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Correction applied to a scored word.
 */
typedef enum LexprobFix {
  LEXPROB_FIX_NONE = 0,
  LEXPROB_FIX_FIX1 = 1,
  LEXPROB_FIX_FIX2 = 2,
  LEXPROB_FIX_FIX3 = 3,
} LexprobFix;

/**
 * Result code of every fallible call.
 */
typedef enum LexprobStatus {
  LEXPROB_STATUS_OK = 0,
  LEXPROB_STATUS_NULL_ARGUMENT = 1,
  LEXPROB_STATUS_INVALID_UTF8 = 2,
  LEXPROB_STATUS_LOAD = 3,
  LEXPROB_STATUS_UNKNOWN_WORD = 4,
  LEXPROB_STATUS_ZERO_CONTEXT = 5,
  LEXPROB_STATUS_MODEL = 6,
  LEXPROB_STATUS_UNSUPPORTED = 7,
  LEXPROB_STATUS_PANIC = 8,
} LexprobStatus;

/**
 * Conditional subword model.
 */
typedef struct LexprobModel LexprobModel;

/**
 * Tokeniser spec with its vocabulary.
 */
typedef struct LexprobSpec LexprobSpec;

/**
 * Natural-log probabilities of one word given its context.
 */
typedef struct LexprobWordScore {
  double logp_buggy;
  double log_correction;
  double logp_fixed;
  enum LexprobFix applied_fix;
} LexprobWordScore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null.
 */
const char *lexprob_last_error(void);

/**
 * Loads the vocabulary and tokeniser named in a run configuration.
 *
 * # Safety
 * `config_path` is a nul-terminated string; `out` is writable.
 */
enum LexprobStatus lexprob_spec_load(const char *config_path, struct LexprobSpec **out);

/**
 * # Safety
 * `spec` comes from [`lexprob_spec_load`] and is not used afterwards.
 */
void lexprob_spec_free(struct LexprobSpec *spec);

/**
 * Number of words in the lexicon, or 0 for a null handle.
 *
 * # Safety
 * `spec` is null or a live handle.
 */
size_t lexprob_spec_word_count(const struct LexprobSpec *spec);

/**
 * Loads the model named in a run configuration, sized to `spec`'s vocabulary.
 *
 * # Safety
 * `config_path` is a nul-terminated string, `spec` a live handle, `out` writable.
 */
enum LexprobStatus lexprob_model_load(const char *config_path,
                                      const struct LexprobSpec *spec,
                                      struct LexprobModel **out);

/**
 * # Safety
 * `model` comes from [`lexprob_model_load`] and is not used afterwards.
 */
void lexprob_model_free(struct LexprobModel *model);

/**
 * Probability of `word` as the next word after `context`.
 *
 * # Safety
 * Handles are live; `context` holds `n_context` nul-terminated strings
 * (it may be null when `n_context` is 0); `out` is writable.
 */
enum LexprobStatus lexprob_score_word(const struct LexprobModel *model,
                                      const struct LexprobSpec *spec,
                                      const char *const *context,
                                      size_t n_context,
                                      const char *word,
                                      struct LexprobWordScore *out);

/**
 * Log probability that the sentence ends after `context`.
 *
 * # Safety
 * As [`lexprob_score_word`]; `out` is writable.
 */
enum LexprobStatus lexprob_end_logprob(const struct LexprobModel *model,
                                       const struct LexprobSpec *spec,
                                       const char *const *context,
                                       size_t n_context,
                                       double *out);

/**
 * Log probability of a whole sentence, end of sentence included.
 *
 * # Safety
 * As [`lexprob_score_word`], with `sentence` holding `n_words` strings.
 */
enum LexprobStatus lexprob_sentence_logprob(const struct LexprobModel *model,
                                            const struct LexprobSpec *spec,
                                            const char *const *sentence,
                                            size_t n_words,
                                            double *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* LEXPROB_H */
