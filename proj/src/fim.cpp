#include "relrep/fim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "relrep/error.hpp"
#include "relrep/quadrature.hpp"

namespace relrep {

std::string to_string(FimCoords coords) {
  switch (coords) {
    case FimCoords::means: return "means";
    case FimCoords::full: return "full";
    case FimCoords::relative_means: return "relative_means";
  }
  return "?";
}

std::string to_string(FimEstimator estimator) {
  return estimator == FimEstimator::monte_carlo ? "monte_carlo" : "quadrature";
}

bool FisherMatrix::is_symmetric(double tol) const {
  return entries.rows() == entries.cols() && (entries - entries.transpose()).cwiseAbs().maxCoeff() <= tol;
}

double FisherMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(entries, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

std::vector<std::string> coordinate_names(std::size_t k, FimCoords coords) {
  std::vector<std::string> names;
  auto indexed = [](const char* stem, std::size_t i) { return stem + std::to_string(i + 1); };
  switch (coords) {
    case FimCoords::means:
      for (std::size_t i = 0; i < k; ++i) names.push_back(indexed("mu", i));
      break;
    case FimCoords::full:
      for (std::size_t i = 0; i + 1 < k; ++i) names.push_back(indexed("pi", i));
      for (std::size_t i = 0; i < k; ++i) names.push_back(indexed("mu", i));
      for (std::size_t i = 0; i < k; ++i) names.push_back(indexed("sigma", i));
      break;
    case FimCoords::relative_means:
      names.push_back("mu1");
      for (std::size_t i = 0; i + 1 < k; ++i) names.push_back(indexed("delta", i));
      break;
  }
  return names;
}

Eigen::VectorXd coordinate_score(const MixtureParams& params, double x, FimCoords coords,
                                 const ReparamSpec& spec) {
  if (coords == FimCoords::means) {
    const Score s = score(params, x);
    return Eigen::Map<const Eigen::VectorXd>(s.means.data(), static_cast<Eigen::Index>(s.means.size()));
  }
  if (coords == FimCoords::full) {
    const auto flat = score(params, x).flat();
    return Eigen::Map<const Eigen::VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size()));
  }
  // Relative coordinates: p(x) = sum_k pi_k N(x | mu1 + sum_{i<k} gap_i, sigma_k),
  // so d/dmu1 collects every component and d/dgap_i those above gap i.
  const std::size_t k = params.size();
  for (std::size_t j = 1; j < k; ++j) {
    if (params.means[j] < params.means[j - 1]) {
      fail(ErrorCode::argument, "relative coordinates need means in nondecreasing order");
    }
  }
  std::vector<double> terms(k);
  const double log_p = component_log_terms(params, x, terms);
  std::vector<double> pull(k);
  for (std::size_t j = 0; j < k; ++j) {
    const double sigma = params.sigmas[j];
    pull[j] = std::exp(terms[j] - log_p) * (x - params.means[j]) / (sigma * sigma);
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(k));
  double above = 0.0;
  for (std::size_t j = k; j-- > 1;) {
    above += pull[j];
    double chain = 1.0;
    if (spec.encoding == DeltaEncoding::squared) {
      chain = 2.0 * std::sqrt(params.means[j] - params.means[j - 1] - spec.clearance);
    }
    out[static_cast<Eigen::Index>(j)] = above * chain;
  }
  out[0] = above + pull[0];
  return out;
}

namespace {

void guard_relative(const MixtureParams& params, const ReparamSpec& spec) {
  const auto report = classify_singularities(params);
  if (!report.is_identifiable()) {
    fail(ErrorCode::singularity_guard,
         "relative Fisher information requested on the singular set (" +
             std::to_string(report.elimination_hits.size()) + " elimination, " +
             std::to_string(report.overlap_hits.size()) + " overlap hits)");
  }
  for (std::size_t j = 1; j < params.size(); ++j) {
    const double gap = params.means[j] - params.means[j - 1];
    if (gap < spec.clearance || (spec.encoding == DeltaEncoding::squared && gap == spec.clearance)) {
      fail(ErrorCode::singularity_guard,
           "relative Fisher information needs mean gaps above the clearance; gap " +
               std::to_string(j) + " is " + format_double(gap));
    }
  }
}

}  // namespace

FisherMatrix fim_estimate(const MixtureParams& params_in, FimCoords coords, FimEstimator method,
                          std::size_t budget, std::uint64_t seed, const ReparamSpec& spec) {
  if (budget < 100) fail(ErrorCode::argument, "Fisher estimation budget must be at least 100");
  params_in.validate();
  spec.validate();
  MixtureParams params = params_in;
  if (coords == FimCoords::relative_means) {
    params = canonical_order(params_in);
    guard_relative(params, spec);
  }
  const auto names = coordinate_names(params.size(), coords);
  const auto dim = static_cast<Eigen::Index>(names.size());

  FisherMatrix info;
  info.coordinate_names = names;
  info.coordinates = to_string(coords);
  info.estimator = method;
  info.budget = budget;
  info.entries = Eigen::MatrixXd::Zero(dim, dim);
  info.standard_error = Eigen::MatrixXd::Zero(dim, dim);

  if (method == FimEstimator::quadrature) {
    for (const auto& node : mixture_quadrature(params, budget)) {
      const Eigen::VectorXd s = coordinate_score(params, node.x, coords, spec);
      info.entries.noalias() += node.weight * s * s.transpose();
    }
  } else {
    // Welford accumulation per entry for the mean and its standard error.
    const Dataset draws = sample(params, budget, seed);
    Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(dim, dim);
    double count = 0.0;
    for (double x : draws.points) {
      const Eigen::VectorXd s = coordinate_score(params, x, coords, spec);
      const Eigen::MatrixXd outer = s * s.transpose();
      count += 1.0;
      const Eigen::MatrixXd delta = outer - info.entries;
      info.entries += delta / count;
      m2 += delta.cwiseProduct(outer - info.entries);
    }
    info.standard_error = (m2 / ((count - 1.0) * count)).cwiseSqrt();
  }
  info.entries = 0.5 * (info.entries + info.entries.transpose()).eval();
  info.standard_error = 0.5 * (info.standard_error + info.standard_error.transpose()).eval();
  return info;
}

FisherMatrix transform_fim(const FisherMatrix& info, const Eigen::MatrixXd& jacobian,
                           std::vector<std::string> names, std::string coordinates) {
  if (jacobian.rows() != info.dim() || info.entries.rows() != info.entries.cols()) {
    fail(ErrorCode::argument, "Jacobian rows must match the Fisher matrix dimension");
  }
  FisherMatrix out;
  out.entries = jacobian.transpose() * info.entries * jacobian;
  out.entries = 0.5 * (out.entries + out.entries.transpose()).eval();
  out.estimator = info.estimator;
  out.budget = info.budget;
  out.coordinates = std::move(coordinates);
  if (names.empty()) {
    for (Eigen::Index j = 0; j < jacobian.cols(); ++j) names.push_back("coord" + std::to_string(j + 1));
  }
  if (static_cast<Eigen::Index>(names.size()) != jacobian.cols()) {
    fail(ErrorCode::argument, "one name per transformed coordinate");
  }
  out.coordinate_names = std::move(names);
  return out;
}

double length_element(const Eigen::MatrixXd& info, const Eigen::VectorXd& delta) {
  if (info.rows() != delta.size() || info.cols() != delta.size()) {
    fail(ErrorCode::argument, "displacement dimension does not match the Fisher matrix");
  }
  return delta.dot(info * delta);
}

ExpFamilySpec unit_gaussian_family() {
  ExpFamilySpec f;
  f.name = "gaussian_unit_variance";
  f.log_normalizer = [](double t) { return 0.5 * t * t; };
  f.grad_log_normalizer = [](double t) { return t; };
  f.hess_log_normalizer = [](double) { return 1.0; };
  f.conjugate = [](double e) { return 0.5 * e * e; };
  f.hess_conjugate = [](double) { return 1.0; };
  return f;
}

ExpFamilySpec bernoulli_family() {
  ExpFamilySpec f;
  f.name = "bernoulli";
  f.log_normalizer = [](double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); };
  f.grad_log_normalizer = [](double t) { return 1.0 / (1.0 + std::exp(-t)); };
  f.hess_log_normalizer = [](double t) {
    const double p = 1.0 / (1.0 + std::exp(-t));
    return p * (1.0 - p);
  };
  f.conjugate = [](double e) { return e * std::log(e) + (1.0 - e) * std::log1p(-e); };
  f.hess_conjugate = [](double e) { return 1.0 / (e * (1.0 - e)); };
  f.domain_min = -30.0;
  f.domain_max = 30.0;
  return f;
}

ExpFamilySpec poisson_family() {
  ExpFamilySpec f;
  f.name = "poisson";
  f.log_normalizer = [](double t) { return std::exp(t); };
  f.grad_log_normalizer = [](double t) { return std::exp(t); };
  f.hess_log_normalizer = [](double t) { return std::exp(t); };
  f.conjugate = [](double e) { return e * std::log(e) - e; };
  f.hess_conjugate = [](double e) { return 1.0 / e; };
  f.domain_min = -20.0;
  f.domain_max = 20.0;
  return f;
}

std::vector<ExpFamilySpec> exp_family_catalog() {
  return {unit_gaussian_family(), bernoulli_family(), poisson_family()};
}

double crouzeix_check(const ExpFamilySpec& family, double theta, HessianMode mode, double fd_step) {
  if (!(theta >= family.domain_min && theta <= family.domain_max)) {
    fail(ErrorCode::domain, "theta outside the natural parameter domain of " + family.name);
  }
  const double eta = family.grad_log_normalizer(theta);
  const double h_primal = family.hess_log_normalizer(theta);
  double h_dual = 0.0;
  if (mode == HessianMode::analytic) {
    h_dual = family.hess_conjugate(eta);
  } else {
    const double h = fd_step * std::max(1.0, std::abs(eta));
    h_dual = (family.conjugate(eta + h) - 2.0 * family.conjugate(eta) + family.conjugate(eta - h)) /
             (h * h);
  }
  return std::abs(h_primal * h_dual - 1.0);
}

std::string fim_to_csv(const FisherMatrix& info) {
  std::ostringstream out;
  out << "# schema=1 kind=fisher coords=" << info.coordinates
      << " estimator=" << to_string(info.estimator) << " budget=" << info.budget << "\n";
  for (std::size_t j = 0; j < info.coordinate_names.size(); ++j) {
    out << (j ? "," : "") << info.coordinate_names[j];
  }
  out << "\n";
  for (Eigen::Index r = 0; r < info.entries.rows(); ++r) {
    for (Eigen::Index c = 0; c < info.entries.cols(); ++c) {
      out << (c ? "," : "") << format_double(info.entries(r, c));
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace relrep
