#ifndef DMVC_H
#define DMVC_H

#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every call.
 */
typedef enum DmvcStatus {
  DMVC_STATUS_OK = 0,
  DMVC_STATUS_NULL_POINTER = 1,
  DMVC_STATUS_INVALID_ARGUMENT = 2,
  DMVC_STATUS_DOMAIN = 3,
  DMVC_STATUS_NUMERICAL = 4,
  DMVC_STATUS_DIMENSION_MISMATCH = 5,
  DMVC_STATUS_INVALID_CONFIG = 6,
  DMVC_STATUS_IO = 7,
  DMVC_STATUS_EMPTY_TRACE = 8,
  DMVC_STATUS_PANIC = 9,
} DmvcStatus;

/**
 * Dependence direction: `VToU` is the dependence of `U` on `V`.
 */
typedef enum DmvcDirection {
  DMVC_DIRECTION_V_TO_U = 0,
  DMVC_DIRECTION_U_TO_V = 1,
} DmvcDirection;

/**
 * Chains sampled in memory.
 */
typedef struct DmvcFit DmvcFit;

/**
 * Posterior similarity matrix together with the draws it came from.
 */
typedef struct DmvcSimilarity DmvcSimilarity;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length in bytes, without
 * the terminator, so callers can size a second call.
 */
size_t dmvc_last_error_message(char *buf, size_t len);

/**
 * Static description of a status code.
 */
const char *dmvc_status_name(enum DmvcStatus status);

enum DmvcStatus dmvc_rluf_cdf(double u,
                              double v,
                              double theta,
                              double alpha,
                              double beta,
                              double *result);

/**
 * Closed-form directional dependence of the RLUF copula.
 */
enum DmvcStatus dmvc_rluf_directional_rho(double theta,
                                          double alpha,
                                          double beta,
                                          enum DmvcDirection direction,
                                          double *result);

enum DmvcStatus dmvc_tawn_cdf(double u,
                              double v,
                              double psi1,
                              double psi2,
                              double theta,
                              double *result);

/**
 * Fills `u[0..n]` and `v[0..n]` with copula draws.
 */
enum DmvcStatus dmvc_tawn_sample(size_t n,
                                 double psi1,
                                 double psi2,
                                 double theta,
                                 uint64_t seed,
                                 double *u,
                                 double *v);

enum DmvcStatus dmvc_rand_index(const uint32_t *a, const uint32_t *b, size_t n, double *result);

/**
 * Agreement between `estimate` and `truth` under the best matching of labels.
 */
enum DmvcStatus dmvc_accuracy(const uint32_t *estimate,
                              const uint32_t *truth,
                              size_t n,
                              double *result);

/**
 * Builds a similarity matrix from `draws` row-major label vectors of
 * length `n`.
 */
enum DmvcStatus dmvc_similarity_new(const uint32_t *labels,
                                    size_t draws,
                                    size_t n,
                                    struct DmvcSimilarity **handle);

size_t dmvc_similarity_size(const struct DmvcSimilarity *handle);

enum DmvcStatus dmvc_similarity_get(const struct DmvcSimilarity *handle,
                                    size_t i,
                                    size_t j,
                                    double *result);

/**
 * Writes the least-squares consensus draw into `labels[0..n]`.
 */
enum DmvcStatus dmvc_similarity_consensus(const struct DmvcSimilarity *handle,
                                          uint32_t *labels,
                                          size_t n);

void dmvc_similarity_free(struct DmvcSimilarity *handle);

/**
 * Writes a synthetic scenario described by the JSON file at `config` into
 * `out_dir`.
 */
enum DmvcStatus dmvc_simulate(const char *config, const char *out_dir);

/**
 * Runs a fit from a config file and writes its output directory, as the
 * `fit` command does.
 */
enum DmvcStatus dmvc_fit_to_disk(const char *config);

/**
 * Loads the views of a config file and runs its chains without writing output.
 */
enum DmvcStatus dmvc_fit_new(const char *config, struct DmvcFit **handle);

size_t dmvc_fit_objects(const struct DmvcFit *handle);

size_t dmvc_fit_chains(const struct DmvcFit *handle);

size_t dmvc_fit_draws(const struct DmvcFit *handle);

/**
 * Index of the view whose clustering is the consensus.
 */
size_t dmvc_fit_final_view(const struct DmvcFit *handle);

/**
 * Copies retained draw `draw` of `view` in `chain` into `labels[0..n]`.
 */
enum DmvcStatus dmvc_fit_labels(const struct DmvcFit *handle,
                                size_t chain,
                                size_t draw,
                                size_t view,
                                uint32_t *labels,
                                size_t n);

void dmvc_fit_free(struct DmvcFit *handle);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DMVC_H */
