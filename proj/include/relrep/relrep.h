/* C interface to the relrep library.
 *
 * Objects are opaque handles created by rr_*_create / rr_* functions that
 * take an `out` pointer and released by the matching rr_*_destroy.  Every
 * fallible call returns an rr_status; on failure rr_last_error() holds a
 * message for the calling thread until its next failing call.
 */
#ifndef RELREP_H
#define RELREP_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(RELREP_BUILDING)
#    define RELREP_API __declspec(dllexport)
#  else
#    define RELREP_API __declspec(dllimport)
#  endif
#else
#  define RELREP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rr_status {
  RR_OK = 0,
  RR_ERR_ARGUMENT = 1,
  RR_ERR_DOMAIN = 2,
  RR_ERR_NOT_IDENTIFIABLE = 3,
  RR_ERR_DEGENERATE = 4,
  RR_ERR_UNSUPPORTED_ORDER = 5,
  RR_ERR_CONFIG = 6,
  RR_ERR_NUMERICAL = 7,
  RR_ERR_NOT_CONVERGED = 8,
  RR_ERR_SINGULARITY_GUARD = 9,
  RR_ERR_IO = 10,
  RR_ERR_INTERNAL = 11
} rr_status;

typedef struct rr_mixture rr_mixture;
typedef struct rr_relative rr_relative;
typedef struct rr_fit_result rr_fit_result;
typedef struct rr_manifest rr_manifest;

RELREP_API const char* rr_version(void);
RELREP_API const char* rr_last_error(void);
RELREP_API const char* rr_status_name(rr_status status);

/* ---- Gaussian mixtures ------------------------------------------------ */

RELREP_API rr_status rr_mixture_create(size_t k, const double* weights, const double* means,
                                       const double* sigmas, rr_mixture** out);
/* Flat key-value record: K, pi, mu, sigma. */
RELREP_API rr_status rr_mixture_parse(const char* text, rr_mixture** out);
RELREP_API void rr_mixture_destroy(rr_mixture* mixture);
RELREP_API size_t rr_mixture_size(const rr_mixture* mixture);
/* Each output array needs rr_mixture_size() entries; NULL skips a block. */
RELREP_API rr_status rr_mixture_get(const rr_mixture* mixture, double* weights, double* means,
                                    double* sigmas);
RELREP_API rr_status rr_mixture_density(const rr_mixture* mixture, double x, double* out);
RELREP_API rr_status rr_mixture_log_likelihood(const rr_mixture* mixture, const double* points,
                                               size_t n, double* out);
/* out_len must be 3K - 1: (pi_1..pi_{K-1}, mu_1..mu_K, sigma_1..sigma_K). */
RELREP_API rr_status rr_mixture_score(const rr_mixture* mixture, double x, double* out,
                                      size_t out_len);
RELREP_API rr_status rr_mixture_sample(const rr_mixture* mixture, size_t n, uint64_t seed,
                                       double* out);
RELREP_API rr_status rr_mixture_moments(const rr_mixture* mixture, int order, double out[4]);
RELREP_API rr_status rr_mixture_classify(const rr_mixture* mixture, double tol,
                                         int* identifiable, size_t* elimination_hits,
                                         size_t* overlap_hits);

/* ---- Relative reparameterization -------------------------------------- */

typedef enum rr_order_by { RR_ORDER_MEAN = 0, RR_ORDER_SIGMA = 1 } rr_order_by;
typedef enum rr_encoding { RR_ENCODING_RAW = 0, RR_ENCODING_SQUARED = 1 } rr_encoding;

typedef struct rr_reparam_spec {
  rr_order_by order_by;
  double clearance;
  rr_encoding encoding;
} rr_reparam_spec;

RELREP_API rr_reparam_spec rr_reparam_spec_default(void);

RELREP_API rr_status rr_to_relative(const rr_mixture* mixture, const rr_reparam_spec* spec,
                                    rr_relative** out);
RELREP_API void rr_relative_destroy(rr_relative* rel);
RELREP_API size_t rr_relative_size(const rr_relative* rel);
RELREP_API double rr_relative_reference(const rr_relative* rel);
/* Encoded deltas, K - 1 entries. */
RELREP_API rr_status rr_relative_deltas(const rr_relative* rel, double* out, size_t len);
RELREP_API rr_status rr_relative_set_deltas(rr_relative* rel, const double* deltas, size_t len);
/* Zero-based original label of each sorted component, K entries. */
RELREP_API rr_status rr_relative_permutation(const rr_relative* rel, size_t* out, size_t len);
RELREP_API rr_status rr_to_absolute(const rr_relative* rel, const rr_reparam_spec* spec,
                                    int original_labels, rr_mixture** out);
/* K x K, row-major. */
RELREP_API rr_status rr_relative_jacobian(const rr_relative* rel, const rr_reparam_spec* spec,
                                          double* out, size_t len);

/* ---- Averaged gradient dynamics --------------------------------------- */

typedef enum rr_parameterization {
  RR_PARAM_ORIGINAL = 0,
  RR_PARAM_RELATIVE = 1
} rr_parameterization;

/* Velocity of (v, u, w) for a unit-variance truth. */
RELREP_API rr_status rr_expected_velocity(rr_parameterization p, double v, double u, double w,
                                          const rr_mixture* truth, double eta, double out[3]);
/* Velocity of (mu1, mu2) at one grid point. */
RELREP_API rr_status rr_flow_at(rr_parameterization p, double mu1, double mu2, double v,
                                const rr_mixture* truth, double eta, double out[2]);

/* ---- EM and relative ECM ---------------------------------------------- */

typedef struct rr_ecm_config {
  double epsilon;
  size_t max_iters;
  int fix_weights;
  int fix_sigmas;
} rr_ecm_config;

RELREP_API rr_ecm_config rr_ecm_config_default(void);

/* truth may be NULL.  A fit that hits max_iters still returns RR_OK; check
 * rr_fit_result_converged. */
RELREP_API rr_status rr_fit_em_standard(const double* points, size_t n, const rr_mixture* init,
                                        const rr_ecm_config* config, const rr_mixture* truth,
                                        rr_fit_result** out);
RELREP_API rr_status rr_fit_ecm_relative(const double* points, size_t n, const rr_mixture* init,
                                         const rr_reparam_spec* spec,
                                         const rr_ecm_config* config, const rr_mixture* truth,
                                         rr_fit_result** out);
RELREP_API void rr_fit_result_destroy(rr_fit_result* fit);
RELREP_API int rr_fit_result_converged(const rr_fit_result* fit);
RELREP_API size_t rr_fit_result_iterations(const rr_fit_result* fit);
/* Number of trajectory records (iterations + 1; record 0 is the start). */
RELREP_API size_t rr_fit_result_length(const rr_fit_result* fit);
/* dist is NaN when no truth was given; means needs k entries. */
RELREP_API rr_status rr_fit_result_record(const rr_fit_result* fit, size_t index,
                                          double* loglik, double* dist, double* means,
                                          size_t k);
RELREP_API rr_status rr_fit_result_final(const rr_fit_result* fit, rr_mixture** out);

/* ---- Fisher information ----------------------------------------------- */

typedef enum rr_fim_coords {
  RR_FIM_MEANS = 0,
  RR_FIM_FULL = 1,
  RR_FIM_RELATIVE_MEANS = 2
} rr_fim_coords;

typedef enum rr_fim_estimator {
  RR_FIM_MONTE_CARLO = 0,
  RR_FIM_QUADRATURE = 1
} rr_fim_estimator;

RELREP_API rr_status rr_fim_dimension(const rr_mixture* mixture, rr_fim_coords coords,
                                      size_t* out);
/* entries and stderr (may be NULL) are dim x dim row-major; spec may be
 * NULL for the default. */
RELREP_API rr_status rr_fim_estimate(const rr_mixture* mixture, rr_fim_coords coords,
                                     rr_fim_estimator estimator, size_t budget, uint64_t seed,
                                     const rr_reparam_spec* spec, double* entries,
                                     double* stderr_out, size_t len);

/* ---- Experiments ------------------------------------------------------ */

typedef enum rr_experiment_kind {
  RR_EXP_FIELD = 0,
  RR_EXP_GD = 1,
  RR_EXP_ECM = 2,
  RR_EXP_FIM = 3,
  RR_EXP_NN = 4
} rr_experiment_kind;

RELREP_API rr_status rr_experiment_kind_parse(const char* name, rr_experiment_kind* out);
/* Static string; valid for the lifetime of the library. */
RELREP_API const char* rr_experiment_default_config(rr_experiment_kind kind);
/* Writes artifacts into out_dir.  On RR_ERR_NOT_CONVERGED the artifacts
 * and *out are still produced.  seed_override may be NULL. */
RELREP_API rr_status rr_experiment_run(rr_experiment_kind kind, const char* config_path,
                                       const char* out_dir, const uint64_t* seed_override,
                                       rr_manifest** out);
RELREP_API void rr_manifest_destroy(rr_manifest* manifest);
RELREP_API const char* rr_manifest_json(const rr_manifest* manifest);
RELREP_API size_t rr_manifest_summary_count(const rr_manifest* manifest);
RELREP_API const char* rr_manifest_summary_line(const rr_manifest* manifest, size_t index);

#ifdef __cplusplus
}
#endif

#endif /* RELREP_H */
