#include "relrep/ecm.hpp"

#include <cmath>
#include <limits>

#include "relrep/error.hpp"

namespace relrep {

double Responsibilities::mass(std::size_t k) const {
  double total = 0.0;
  for (std::size_t n = 0; n < n_; ++n) total += (*this)(n, k);
  return total;
}

Responsibilities e_step(const MixtureParams& params, const Dataset& data) {
  params.validate();
  data.validate();
  const std::size_t k = params.size();
  Responsibilities gamma(data.size(), k);
  std::vector<double> terms(k);
  for (std::size_t n = 0; n < data.size(); ++n) {
    const double log_p = component_log_terms(params, data.points[n], terms);
    for (std::size_t j = 0; j < k; ++j) gamma(n, j) = std::exp(terms[j] - log_p);
  }
  return gamma;
}

namespace {

void check_shapes(const Responsibilities& gamma, const Dataset& data) {
  if (gamma.rows() != data.size() || gamma.cols() == 0) {
    fail(ErrorCode::argument, "responsibilities do not match the dataset");
  }
}

double sigma_at(const std::vector<double>& sigmas, std::size_t k) {
  return sigmas.empty() ? 1.0 : sigmas.at(k);
}

}  // namespace

MixtureParams m_step_standard(const Responsibilities& gamma, const Dataset& data) {
  MixtureParams none;
  return m_step_standard(gamma, data, none, FrozenBlocks{false, false});
}

MixtureParams m_step_standard(const Responsibilities& gamma, const Dataset& data,
                              const MixtureParams& current, FrozenBlocks frozen) {
  check_shapes(gamma, data);
  const std::size_t k = gamma.cols();
  const double n = static_cast<double>(data.size());
  MixtureParams next;
  next.weights.resize(k);
  next.means.resize(k);
  next.sigmas.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    const double mass = gamma.mass(j);
    if (!(mass > 0.0)) {
      fail(ErrorCode::degenerate, "component " + std::to_string(j + 1) + " has no responsibility mass");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) sum += gamma(i, j) * data.points[i];
    next.means[j] = sum / mass;
    next.weights[j] = frozen.weights ? current.weights.at(j) : mass / n;
    if (frozen.sigmas) {
      next.sigmas[j] = current.sigmas.at(j);
    } else {
      double ss = 0.0;
      for (std::size_t i = 0; i < data.size(); ++i) {
        const double d = data.points[i] - next.means[j];
        ss += gamma(i, j) * d * d;
      }
      if (!(ss > 0.0)) {
        fail(ErrorCode::degenerate, "component " + std::to_string(j + 1) + " collapsed to zero variance");
      }
      next.sigmas[j] = std::sqrt(ss / mass);
    }
  }
  return next;
}

double q_function(const MixtureParams& params, const Responsibilities& gamma,
                  const Dataset& data) {
  check_shapes(gamma, data);
  if (gamma.cols() != params.size()) fail(ErrorCode::argument, "responsibilities do not match K");
  double q = 0.0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    for (std::size_t k = 0; k < params.size(); ++k) {
      const double g = gamma(n, k);
      if (g == 0.0) continue;
      q += g * (std::log(params.weights[k]) +
                log_normal_pdf(data.points[n], params.means[k], params.sigmas[k]));
    }
  }
  return q;
}

double cm_step_reference_mean(const Responsibilities& gamma, const Dataset& data,
                              const std::vector<double>& gaps, const std::vector<double>& sigmas) {
  check_shapes(gamma, data);
  const std::size_t k = gamma.cols();
  if (gaps.size() + 1 != k) fail(ErrorCode::argument, "need K - 1 gaps");
  double numerator = 0.0;
  double denominator = 0.0;
  double offset = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (j > 0) offset += gaps[j - 1];
    const double precision = 1.0 / (sigma_at(sigmas, j) * sigma_at(sigmas, j));
    for (std::size_t n = 0; n < data.size(); ++n) {
      const double a = gamma(n, j) * precision;
      numerator += a * (data.points[n] - offset);
      denominator += a;
    }
  }
  if (!(denominator > 0.0)) fail(ErrorCode::degenerate, "zero total responsibility");
  return numerator / denominator;
}

double cm_step_reference_mean(const Responsibilities& gamma, const Dataset& data, double delta,
                              double clearance) {
  return cm_step_reference_mean(gamma, data, std::vector<double>{delta + clearance});
}

DeltaStep cm_step_delta(const Responsibilities& gamma, const Dataset& data, double mu1,
                        const std::vector<double>& gaps, std::size_t index, double clearance,
                        const std::vector<double>& sigmas) {
  check_shapes(gamma, data);
  const std::size_t k = gamma.cols();
  if (gaps.size() + 1 != k || index >= gaps.size()) {
    fail(ErrorCode::argument, "gap index out of range");
  }
  // Components above the gap move with it; the optimum puts the gap at the
  // precision-weighted mean residual of their points.
  double numerator = 0.0;
  double denominator = 0.0;
  double offset = 0.0;
  for (std::size_t j = 1; j < k; ++j) {
    offset += gaps[j - 1];
    if (j <= index) continue;
    const double others = mu1 + offset - gaps[index];
    const double precision = 1.0 / (sigma_at(sigmas, j) * sigma_at(sigmas, j));
    for (std::size_t n = 0; n < data.size(); ++n) {
      const double a = gamma(n, j) * precision;
      numerator += a * (data.points[n] - others);
      denominator += a;
    }
  }
  if (!(denominator > 0.0)) {
    fail(ErrorCode::degenerate, "no responsibility mass above gap " + std::to_string(index + 1));
  }
  DeltaStep step;
  step.unconstrained = numerator / denominator - clearance;
  if (step.unconstrained >= 0.0) {
    step.delta = step.unconstrained;
    step.multiplier = 0.0;
  } else {
    step.delta = 0.0;
    // dQ/dDelta at Delta = 0 equals denominator * unconstrained.
    step.multiplier = -denominator * step.unconstrained;
  }
  return step;
}

DeltaStep cm_step_delta(const Responsibilities& gamma, const Dataset& data, double mu1,
                        double clearance) {
  return cm_step_delta(gamma, data, mu1, std::vector<double>{clearance}, 0, clearance);
}

void ECMConfig::validate() const {
  if (!(epsilon > 0.0)) fail(ErrorCode::argument, "epsilon must be positive");
  if (max_iters < 1) fail(ErrorCode::argument, "max_iters must be at least 1");
}

double mean_distance(const MixtureParams& a, const MixtureParams& b) {
  if (a.size() != b.size()) fail(ErrorCode::argument, "mixtures differ in K");
  double ss = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a.means[k] - b.means[k];
    ss += d * d;
  }
  return std::sqrt(ss);
}

namespace {

IterationRecord make_record(std::size_t iteration, const MixtureParams& params, double loglik,
                            const std::optional<MixtureParams>& truth) {
  IterationRecord r;
  r.iteration = iteration;
  r.params = params;
  r.reference_mean = params.means.front();
  for (std::size_t k = 1; k < params.size(); ++k) {
    r.gaps.push_back(params.means[k] - params.means[k - 1]);
  }
  r.loglik = loglik;
  if (truth) r.dist_to_true = mean_distance(params, *truth);
  return r;
}

}  // namespace

FitResult fit_ecm_relative(const Dataset& data, const RelativeParams& init,
                           const ReparamSpec& spec, const ECMConfig& config,
                           const std::optional<MixtureParams>& truth) {
  data.validate();
  config.validate();
  spec.validate();
  if (spec.order_by != OrderBy::mean) {
    fail(ErrorCode::argument, "relative ECM reparameterizes the means; use order_by = mean");
  }
  MixtureParams params = to_absolute(init, spec, LabelOrder::canonical);
  params.validate();
  const std::size_t k = params.size();
  std::optional<MixtureParams> sorted_truth;
  if (truth) sorted_truth = canonical_order(*truth);

  double mu1 = init.reference_value;
  std::vector<double> gaps(k - 1);
  for (std::size_t i = 0; i + 1 < k; ++i) gaps[i] = decoded_gap(init, spec, i);

  FitResult result;
  double loglik = log_likelihood(params, data);
  result.trajectory.push_back(make_record(0, params, loglik, sorted_truth));
  for (std::size_t it = 1; it <= config.max_iters; ++it) {
    const Responsibilities gamma = e_step(params, data);
    mu1 = cm_step_reference_mean(gamma, data, gaps, params.sigmas);
    for (std::size_t i = 0; i + 1 < k; ++i) {
      const DeltaStep step = cm_step_delta(gamma, data, mu1, gaps, i, spec.clearance, params.sigmas);
      gaps[i] = step.delta + spec.clearance;
    }
    params.means[0] = mu1;
    for (std::size_t j = 1; j < k; ++j) params.means[j] = params.means[j - 1] + gaps[j - 1];
    const double next = log_likelihood(params, data);
    if (!std::isfinite(next)) fail(ErrorCode::numerical, "log-likelihood became non-finite");
    result.trajectory.push_back(make_record(it, params, next, sorted_truth));
    result.iterations = it;
    const bool done = std::abs(next - loglik) <= config.epsilon;
    loglik = next;
    if (done) {
      result.converged = true;
      break;
    }
  }
  result.final_params = params;
  result.final_relative = init;
  result.final_relative.reference_value = mu1;
  for (std::size_t i = 0; i + 1 < k; ++i) {
    result.final_relative.deltas[i] = encode_delta(gaps[i] - spec.clearance, spec);
  }
  return result;
}

FitResult fit_em_standard(const Dataset& data, const MixtureParams& init, const ECMConfig& config,
                          const std::optional<MixtureParams>& truth) {
  data.validate();
  config.validate();
  init.validate();
  MixtureParams params = init;
  FitResult result;
  double loglik = log_likelihood(params, data);
  result.trajectory.push_back(make_record(0, params, loglik, truth));
  for (std::size_t it = 1; it <= config.max_iters; ++it) {
    const Responsibilities gamma = e_step(params, data);
    params = m_step_standard(gamma, data, params, config.fixed);
    const double next = log_likelihood(params, data);
    if (!std::isfinite(next)) fail(ErrorCode::numerical, "log-likelihood became non-finite");
    result.trajectory.push_back(make_record(it, params, next, truth));
    result.iterations = it;
    const bool done = std::abs(next - loglik) <= config.epsilon;
    loglik = next;
    if (done) {
      result.converged = true;
      break;
    }
  }
  result.final_params = params;
  result.final_relative =
      to_relative(params, ReparamSpec{OrderBy::mean, 0.0, DeltaEncoding::raw_constrained});
  return result;
}

}  // namespace relrep
