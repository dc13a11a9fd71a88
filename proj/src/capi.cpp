#include "relrep/relrep.h"

#include <cmath>
#include <exception>
#include <new>
#include <string>
#include <vector>

#include "relrep/dynamics.hpp"
#include "relrep/ecm.hpp"
#include "relrep/error.hpp"
#include "relrep/experiment.hpp"
#include "relrep/fim.hpp"
#include "relrep/gmm.hpp"
#include "relrep/reparam.hpp"

struct rr_mixture {
  relrep::MixtureParams params;
};

struct rr_relative {
  relrep::RelativeParams rel;
};

struct rr_fit_result {
  relrep::FitResult fit;
};

struct rr_manifest {
  relrep::RunManifest manifest;
  std::string json;
};

namespace {

thread_local std::string last_error;

rr_status status_of(relrep::ErrorCode code) {
  using relrep::ErrorCode;
  switch (code) {
    case ErrorCode::argument: return RR_ERR_ARGUMENT;
    case ErrorCode::domain: return RR_ERR_DOMAIN;
    case ErrorCode::not_identifiable: return RR_ERR_NOT_IDENTIFIABLE;
    case ErrorCode::degenerate: return RR_ERR_DEGENERATE;
    case ErrorCode::unsupported_order: return RR_ERR_UNSUPPORTED_ORDER;
    case ErrorCode::config: return RR_ERR_CONFIG;
    case ErrorCode::numerical: return RR_ERR_NUMERICAL;
    case ErrorCode::singularity_guard: return RR_ERR_SINGULARITY_GUARD;
    case ErrorCode::io: return RR_ERR_IO;
  }
  return RR_ERR_INTERNAL;
}

template <class F>
rr_status guarded(F&& body) noexcept {
  try {
    return body();
  } catch (const relrep::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return RR_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return RR_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown exception";
    return RR_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) relrep::fail(relrep::ErrorCode::argument, what);
}

relrep::ReparamSpec to_spec(const rr_reparam_spec* spec) {
  if (!spec) return {};
  require(spec->order_by == RR_ORDER_MEAN || spec->order_by == RR_ORDER_SIGMA, "unknown order_by");
  require(spec->encoding == RR_ENCODING_RAW || spec->encoding == RR_ENCODING_SQUARED, "unknown encoding");
  relrep::ReparamSpec out;
  out.order_by = spec->order_by == RR_ORDER_MEAN ? relrep::OrderBy::mean : relrep::OrderBy::sigma;
  out.clearance = spec->clearance;
  out.encoding =
      spec->encoding == RR_ENCODING_RAW ? relrep::DeltaEncoding::raw_constrained : relrep::DeltaEncoding::squared;
  out.validate();
  return out;
}

relrep::Parameterization to_param(rr_parameterization p) {
  require(p == RR_PARAM_ORIGINAL || p == RR_PARAM_RELATIVE, "unknown parameterization");
  return p == RR_PARAM_ORIGINAL ? relrep::Parameterization::original : relrep::Parameterization::relative;
}

relrep::FimCoords to_coords(rr_fim_coords c) {
  switch (c) {
    case RR_FIM_MEANS: return relrep::FimCoords::means;
    case RR_FIM_FULL: return relrep::FimCoords::full;
    case RR_FIM_RELATIVE_MEANS: return relrep::FimCoords::relative_means;
  }
  relrep::fail(relrep::ErrorCode::argument, "unknown Fisher coordinates");
}

relrep::ECMConfig to_ecm(const rr_ecm_config* config) {
  relrep::ECMConfig out;
  if (config) {
    out.epsilon = config->epsilon;
    out.max_iters = config->max_iters;
    out.fixed.weights = config->fix_weights != 0;
    out.fixed.sigmas = config->fix_sigmas != 0;
  }
  return out;
}

relrep::Dataset to_dataset(const double* points, size_t n) {
  require(points != nullptr || n == 0, "points is NULL");
  relrep::Dataset data;
  data.points.assign(points, points + n);
  data.validate();
  return data;
}

std::optional<relrep::MixtureParams> optional_truth(const rr_mixture* truth) {
  if (!truth) return std::nullopt;
  return truth->params;
}

}  // namespace

extern "C" {

const char* rr_version(void) { return relrep::kToolVersion; }

const char* rr_last_error(void) { return last_error.c_str(); }

const char* rr_status_name(rr_status status) {
  switch (status) {
    case RR_OK: return "ok";
    case RR_ERR_ARGUMENT: return "argument";
    case RR_ERR_DOMAIN: return "domain";
    case RR_ERR_NOT_IDENTIFIABLE: return "not_identifiable";
    case RR_ERR_DEGENERATE: return "degenerate";
    case RR_ERR_UNSUPPORTED_ORDER: return "unsupported_order";
    case RR_ERR_CONFIG: return "config";
    case RR_ERR_NUMERICAL: return "numerical";
    case RR_ERR_NOT_CONVERGED: return "not_converged";
    case RR_ERR_SINGULARITY_GUARD: return "singularity_guard";
    case RR_ERR_IO: return "io";
    case RR_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

rr_status rr_mixture_create(size_t k, const double* weights, const double* means, const double* sigmas,
                            rr_mixture** out) {
  return guarded([&] {
    require(out && weights && means && sigmas, "NULL argument");
    *out = nullptr;
    auto params = relrep::MixtureParams::make({weights, weights + k}, {means, means + k}, {sigmas, sigmas + k});
    *out = new rr_mixture{std::move(params)};
    return RR_OK;
  });
}

rr_status rr_mixture_parse(const char* text, rr_mixture** out) {
  return guarded([&] {
    require(out && text, "NULL argument");
    *out = nullptr;
    *out = new rr_mixture{relrep::parse_params(text)};
    return RR_OK;
  });
}

void rr_mixture_destroy(rr_mixture* mixture) { delete mixture; }

size_t rr_mixture_size(const rr_mixture* mixture) { return mixture ? mixture->params.size() : 0; }

rr_status rr_mixture_get(const rr_mixture* mixture, double* weights, double* means, double* sigmas) {
  return guarded([&] {
    require(mixture, "NULL mixture");
    const auto& p = mixture->params;
    for (size_t k = 0; k < p.size(); ++k) {
      if (weights) weights[k] = p.weights[k];
      if (means) means[k] = p.means[k];
      if (sigmas) sigmas[k] = p.sigmas[k];
    }
    return RR_OK;
  });
}

rr_status rr_mixture_density(const rr_mixture* mixture, double x, double* out) {
  return guarded([&] {
    require(mixture && out, "NULL argument");
    *out = relrep::density(mixture->params, x);
    return RR_OK;
  });
}

rr_status rr_mixture_log_likelihood(const rr_mixture* mixture, const double* points, size_t n, double* out) {
  return guarded([&] {
    require(mixture && out, "NULL argument");
    *out = relrep::log_likelihood(mixture->params, to_dataset(points, n));
    return RR_OK;
  });
}

rr_status rr_mixture_score(const rr_mixture* mixture, double x, double* out, size_t out_len) {
  return guarded([&] {
    require(mixture && out, "NULL argument");
    const auto flat = relrep::score(mixture->params, x).flat();
    require(out_len == flat.size(), "score buffer must hold 3K - 1 values");
    std::copy(flat.begin(), flat.end(), out);
    return RR_OK;
  });
}

rr_status rr_mixture_sample(const rr_mixture* mixture, size_t n, uint64_t seed, double* out) {
  return guarded([&] {
    require(mixture && out, "NULL argument");
    const auto data = relrep::sample(mixture->params, n, seed);
    std::copy(data.points.begin(), data.points.end(), out);
    return RR_OK;
  });
}

rr_status rr_mixture_moments(const rr_mixture* mixture, int order, double out[4]) {
  return guarded([&] {
    require(mixture && out, "NULL argument");
    const auto m = relrep::mixture_moments(mixture->params, order);
    for (int i = 0; i < 4; ++i) out[i] = i <= order ? m.raw[static_cast<size_t>(i)] : 0.0;
    return RR_OK;
  });
}

rr_status rr_mixture_classify(const rr_mixture* mixture, double tol, int* identifiable, size_t* elimination_hits,
                              size_t* overlap_hits) {
  return guarded([&] {
    require(mixture, "NULL mixture");
    const auto report = relrep::classify_singularities(mixture->params, tol);
    if (identifiable) *identifiable = report.is_identifiable() ? 1 : 0;
    if (elimination_hits) *elimination_hits = report.elimination_hits.size();
    if (overlap_hits) *overlap_hits = report.overlap_hits.size();
    return RR_OK;
  });
}

rr_reparam_spec rr_reparam_spec_default(void) {
  const relrep::ReparamSpec d;
  return rr_reparam_spec{RR_ORDER_MEAN, d.clearance,
                         d.encoding == relrep::DeltaEncoding::squared ? RR_ENCODING_SQUARED : RR_ENCODING_RAW};
}

rr_status rr_to_relative(const rr_mixture* mixture, const rr_reparam_spec* spec, rr_relative** out) {
  return guarded([&] {
    require(mixture && out, "NULL argument");
    *out = nullptr;
    *out = new rr_relative{relrep::to_relative(mixture->params, to_spec(spec))};
    return RR_OK;
  });
}

void rr_relative_destroy(rr_relative* rel) { delete rel; }

size_t rr_relative_size(const rr_relative* rel) { return rel ? rel->rel.size() : 0; }

double rr_relative_reference(const rr_relative* rel) { return rel ? rel->rel.reference_value : NAN; }

rr_status rr_relative_deltas(const rr_relative* rel, double* out, size_t len) {
  return guarded([&] {
    require(rel && out, "NULL argument");
    require(len == rel->rel.deltas.size(), "delta buffer must hold K - 1 values");
    std::copy(rel->rel.deltas.begin(), rel->rel.deltas.end(), out);
    return RR_OK;
  });
}

rr_status rr_relative_set_deltas(rr_relative* rel, const double* deltas, size_t len) {
  return guarded([&] {
    require(rel && deltas, "NULL argument");
    require(len == rel->rel.deltas.size(), "need K - 1 deltas");
    for (size_t i = 0; i < len; ++i) require(std::isfinite(deltas[i]), "deltas must be finite");
    rel->rel.deltas.assign(deltas, deltas + len);
    return RR_OK;
  });
}

rr_status rr_relative_permutation(const rr_relative* rel, size_t* out, size_t len) {
  return guarded([&] {
    require(rel && out, "NULL argument");
    require(len == rel->rel.permutation.size(), "permutation buffer must hold K values");
    std::copy(rel->rel.permutation.begin(), rel->rel.permutation.end(), out);
    return RR_OK;
  });
}

rr_status rr_to_absolute(const rr_relative* rel, const rr_reparam_spec* spec, int original_labels,
                         rr_mixture** out) {
  return guarded([&] {
    require(rel && out, "NULL argument");
    *out = nullptr;
    const auto labels = original_labels ? relrep::LabelOrder::original : relrep::LabelOrder::canonical;
    *out = new rr_mixture{relrep::to_absolute(rel->rel, to_spec(spec), labels)};
    return RR_OK;
  });
}

rr_status rr_relative_jacobian(const rr_relative* rel, const rr_reparam_spec* spec, double* out, size_t len) {
  return guarded([&] {
    require(rel && out, "NULL argument");
    const Eigen::MatrixXd j = relrep::jacobian(rel->rel, to_spec(spec));
    require(len == static_cast<size_t>(j.size()), "Jacobian buffer must hold K * K values");
    for (Eigen::Index r = 0; r < j.rows(); ++r) {
      for (Eigen::Index c = 0; c < j.cols(); ++c) out[r * j.cols() + c] = j(r, c);
    }
    return RR_OK;
  });
}

rr_status rr_expected_velocity(rr_parameterization p, double v, double u, double w, const rr_mixture* truth,
                               double eta, double out[3]) {
  return guarded([&] {
    require(truth && out, "NULL argument");
    const relrep::TrueModel model(truth->params);
    const relrep::UVWState state{v, u, w, to_param(p)};
    const Eigen::Vector3d vel = state.parameterization == relrep::Parameterization::original
                                    ? relrep::expected_velocity_original(state, model, eta)
                                    : relrep::expected_velocity_relative(state, model, eta);
    for (int i = 0; i < 3; ++i) out[i] = vel[i];
    return RR_OK;
  });
}

rr_status rr_flow_at(rr_parameterization p, double mu1, double mu2, double v, const rr_mixture* truth, double eta,
                     double out[2]) {
  return guarded([&] {
    require(truth && out, "NULL argument");
    const relrep::TrueModel model(truth->params);
    const auto cell = relrep::flow_at(mu1, mu2, v, model, to_param(p), eta);
    out[0] = cell.dmu1_dt;
    out[1] = cell.dmu2_dt;
    return RR_OK;
  });
}

rr_ecm_config rr_ecm_config_default(void) {
  const relrep::ECMConfig d;
  return rr_ecm_config{d.epsilon, d.max_iters, d.fixed.weights ? 1 : 0, d.fixed.sigmas ? 1 : 0};
}

rr_status rr_fit_em_standard(const double* points, size_t n, const rr_mixture* init, const rr_ecm_config* config,
                             const rr_mixture* truth, rr_fit_result** out) {
  return guarded([&] {
    require(init && out, "NULL argument");
    *out = nullptr;
    auto fit = relrep::fit_em_standard(to_dataset(points, n), init->params, to_ecm(config), optional_truth(truth));
    *out = new rr_fit_result{std::move(fit)};
    return RR_OK;
  });
}

rr_status rr_fit_ecm_relative(const double* points, size_t n, const rr_mixture* init, const rr_reparam_spec* spec,
                              const rr_ecm_config* config, const rr_mixture* truth, rr_fit_result** out) {
  return guarded([&] {
    require(init && out, "NULL argument");
    *out = nullptr;
    const relrep::ReparamSpec s = to_spec(spec);
    auto fit = relrep::fit_ecm_relative(to_dataset(points, n), relrep::to_relative(init->params, s), s,
                                        to_ecm(config), optional_truth(truth));
    *out = new rr_fit_result{std::move(fit)};
    return RR_OK;
  });
}

void rr_fit_result_destroy(rr_fit_result* fit) { delete fit; }

int rr_fit_result_converged(const rr_fit_result* fit) { return fit && fit->fit.converged ? 1 : 0; }

size_t rr_fit_result_iterations(const rr_fit_result* fit) { return fit ? fit->fit.iterations : 0; }

size_t rr_fit_result_length(const rr_fit_result* fit) { return fit ? fit->fit.trajectory.size() : 0; }

rr_status rr_fit_result_record(const rr_fit_result* fit, size_t index, double* loglik, double* dist, double* means,
                               size_t k) {
  return guarded([&] {
    require(fit, "NULL fit");
    require(index < fit->fit.trajectory.size(), "record index out of range");
    const auto& r = fit->fit.trajectory[index];
    if (loglik) *loglik = r.loglik;
    if (dist) *dist = r.dist_to_true.value_or(NAN);
    if (means) {
      require(k == r.params.size(), "means buffer must hold K values");
      std::copy(r.params.means.begin(), r.params.means.end(), means);
    }
    return RR_OK;
  });
}

rr_status rr_fit_result_final(const rr_fit_result* fit, rr_mixture** out) {
  return guarded([&] {
    require(fit && out, "NULL argument");
    *out = new rr_mixture{fit->fit.final_params};
    return RR_OK;
  });
}

rr_status rr_fim_dimension(const rr_mixture* mixture, rr_fim_coords coords, size_t* out) {
  return guarded([&] {
    require(mixture && out, "NULL argument");
    *out = relrep::coordinate_names(mixture->params.size(), to_coords(coords)).size();
    return RR_OK;
  });
}

rr_status rr_fim_estimate(const rr_mixture* mixture, rr_fim_coords coords, rr_fim_estimator estimator, size_t budget,
                          uint64_t seed, const rr_reparam_spec* spec, double* entries, double* stderr_out,
                          size_t len) {
  return guarded([&] {
    require(mixture && entries, "NULL argument");
    require(estimator == RR_FIM_MONTE_CARLO || estimator == RR_FIM_QUADRATURE, "unknown estimator");
    const auto method =
        estimator == RR_FIM_MONTE_CARLO ? relrep::FimEstimator::monte_carlo : relrep::FimEstimator::quadrature;
    const auto info = relrep::fim_estimate(mixture->params, to_coords(coords), method, budget, seed, to_spec(spec));
    require(len == static_cast<size_t>(info.entries.size()), "buffer must hold dim * dim values");
    const Eigen::Index d = info.dim();
    for (Eigen::Index r = 0; r < d; ++r) {
      for (Eigen::Index c = 0; c < d; ++c) {
        entries[r * d + c] = info.entries(r, c);
        if (stderr_out) stderr_out[r * d + c] = info.standard_error(r, c);
      }
    }
    return RR_OK;
  });
}

rr_status rr_experiment_kind_parse(const char* name, rr_experiment_kind* out) {
  return guarded([&] {
    require(name && out, "NULL argument");
    *out = static_cast<rr_experiment_kind>(relrep::parse_experiment_kind(name));
    return RR_OK;
  });
}

const char* rr_experiment_default_config(rr_experiment_kind kind) {
  static const std::vector<std::string> defaults = [] {
    std::vector<std::string> out;
    for (int k = RR_EXP_FIELD; k <= RR_EXP_NN; ++k) {
      out.push_back(relrep::default_config(static_cast<relrep::ExperimentKind>(k)));
    }
    return out;
  }();
  if (kind < RR_EXP_FIELD || kind > RR_EXP_NN) return nullptr;
  return defaults[static_cast<size_t>(kind)].c_str();
}

rr_status rr_experiment_run(rr_experiment_kind kind, const char* config_path, const char* out_dir,
                            const uint64_t* seed_override, rr_manifest** out) {
  return guarded([&] {
    require(config_path && out_dir && out, "NULL argument");
    require(kind >= RR_EXP_FIELD && kind <= RR_EXP_NN, "unknown experiment kind");
    *out = nullptr;
    std::optional<uint64_t> seed;
    if (seed_override) seed = *seed_override;
    const auto config =
        relrep::load_experiment_config(config_path, static_cast<relrep::ExperimentKind>(kind), seed);
    auto manifest = relrep::run_experiment(config, out_dir);
    const bool converged = manifest.converged;
    std::string json = manifest.to_json();
    *out = new rr_manifest{std::move(manifest), std::move(json)};
    if (!converged) {
      last_error = "experiment finished without meeting its convergence or acceptance condition";
      return RR_ERR_NOT_CONVERGED;
    }
    return RR_OK;
  });
}

void rr_manifest_destroy(rr_manifest* manifest) { delete manifest; }

const char* rr_manifest_json(const rr_manifest* manifest) { return manifest ? manifest->json.c_str() : nullptr; }

size_t rr_manifest_summary_count(const rr_manifest* manifest) {
  return manifest ? manifest->manifest.summary.size() : 0;
}

const char* rr_manifest_summary_line(const rr_manifest* manifest, size_t index) {
  if (!manifest || index >= manifest->manifest.summary.size()) return nullptr;
  return manifest->manifest.summary[index].c_str();
}

}  // extern "C"
