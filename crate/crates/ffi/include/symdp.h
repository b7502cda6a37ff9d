#ifndef SYMDP_H
#define SYMDP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SymdpStatus {
  SYMDP_STATUS_OK = 0,
  SYMDP_STATUS_NULL_POINTER = 1,
  SYMDP_STATUS_INVALID_ARGUMENT = 2,
  SYMDP_STATUS_INFEASIBLE = 3,
  SYMDP_STATUS_UNKNOWN_TOKEN = 4,
  SYMDP_STATUS_INVALID_CHAIN = 5,
  SYMDP_STATUS_INTERNAL = 6,
} SymdpStatus;

/**
 * Markov chain with a public initial state.
 */
typedef struct SymdpChain SymdpChain;

/**
 * Seeded random stream.
 */
typedef struct SymdpRng SymdpRng;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *symdp_last_error(void);

struct SymdpRng *symdp_rng_new(uint64_t seed);

/**
 * # Safety
 * `rng` must come from [`symdp_rng_new`] and not be used afterwards.
 */
void symdp_rng_free(struct SymdpRng *rng);

/**
 * Parses a chain from its JSON form.
 *
 * # Safety
 * `json` must be a nul-terminated string; `out` must be writable.
 */
enum SymdpStatus symdp_chain_from_json(const char *json, struct SymdpChain **out);

/**
 * Builds a bigram chain from text with the default tokenizer.
 *
 * # Safety
 * `corpus` must be a nul-terminated string; `out` must be writable.
 */
enum SymdpStatus symdp_chain_from_corpus(const char *corpus, struct SymdpChain **out);

/**
 * Copy of `chain` starting from the state named `initial`.
 *
 * # Safety
 * `chain` must be a live handle, `initial` a nul-terminated string and
 * `out` writable.
 */
enum SymdpStatus symdp_chain_with_initial(const struct SymdpChain *chain,
                                          const char *initial,
                                          struct SymdpChain **out);

/**
 * Number of states, or 0 for a null handle.
 *
 * # Safety
 * `chain` must be null or a live handle.
 */
size_t symdp_chain_state_count(const struct SymdpChain *chain);

/**
 * Index of the state named `name`, written to `out`.
 *
 * # Safety
 * `chain` must be a live handle, `name` a nul-terminated string and `out`
 * writable.
 */
enum SymdpStatus symdp_chain_state_index(const struct SymdpChain *chain,
                                         const char *name,
                                         size_t *out);

/**
 * 1 if `word` is feasible from the chain's initial state, 0 otherwise.
 *
 * # Safety
 * `chain` must be a live handle and `word` must point to `len` indices.
 */
int32_t symdp_chain_is_feasible(const struct SymdpChain *chain, const size_t *word, size_t len);

/**
 * # Safety
 * `chain` must come from this library and not be used afterwards.
 */
void symdp_chain_free(struct SymdpChain *chain);

/**
 * Offline mechanism over `alphabet_size` symbols. `output` receives `len`
 * indices.
 *
 * # Safety
 * `input` and `output` must point to `len` elements; `rng` must be live.
 */
enum SymdpStatus symdp_privatize_offline(const size_t *input,
                                         size_t len,
                                         size_t alphabet_size,
                                         double epsilon,
                                         size_t k,
                                         struct SymdpRng *rng,
                                         size_t *output);

/**
 * Online mechanism over `alphabet_size` symbols.
 *
 * # Safety
 * As for [`symdp_privatize_offline`].
 */
enum SymdpStatus symdp_privatize_online(const size_t *input,
                                        size_t len,
                                        size_t alphabet_size,
                                        double epsilon,
                                        size_t k,
                                        struct SymdpRng *rng,
                                        size_t *output);

/**
 * Offline Markov mechanism; the input must be feasible.
 *
 * # Safety
 * `chain` and `rng` must be live; `input` and `output` must point to `len`
 * elements.
 */
enum SymdpStatus symdp_privatize_markov_offline(const struct SymdpChain *chain,
                                                const size_t *input,
                                                size_t len,
                                                double epsilon,
                                                size_t k,
                                                struct SymdpRng *rng,
                                                size_t *output);

/**
 * Online Markov mechanism; any input is accepted, the output is feasible.
 *
 * # Safety
 * As for [`symdp_privatize_markov_offline`].
 */
enum SymdpStatus symdp_privatize_markov_online(const struct SymdpChain *chain,
                                               const size_t *input,
                                               size_t len,
                                               double epsilon,
                                               size_t k,
                                               struct SymdpRng *rng,
                                               size_t *output);

/**
 * Privatizes space-separated tokens against `chain`. `online` selects the
 * mechanism. The result must be released with [`symdp_string_free`].
 *
 * # Safety
 * `chain` and `rng` must be live, `input` nul-terminated, `out` writable.
 */
enum SymdpStatus symdp_privatize_tokens(const struct SymdpChain *chain,
                                        const char *input,
                                        bool online,
                                        double epsilon,
                                        size_t k,
                                        struct SymdpRng *rng,
                                        char **out);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void symdp_string_free(char *s);

/**
 * Closed-form mean and variance of the output distance. `online` selects
 * the mechanism.
 *
 * # Safety
 * `expectation` and `variance` must be writable.
 */
enum SymdpStatus symdp_moments(size_t n,
                               size_t alphabet_size,
                               double epsilon,
                               size_t k,
                               bool online,
                               double *expectation,
                               double *variance);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SYMDP_H */
