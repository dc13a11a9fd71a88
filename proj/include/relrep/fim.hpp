#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "relrep/gmm.hpp"
#include "relrep/reparam.hpp"

namespace relrep {

enum class FimCoords {
  /// mu_1..mu_K with weights and sigmas fixed.
  means,
  /// pi_1..pi_{K-1}, mu_1..mu_K, sigma_1..sigma_K.
  full,
  /// Reference mean and encoded gaps of the mean ordering (canonical labels).
  relative_means,
};

enum class FimEstimator { monte_carlo, quadrature };

std::string to_string(FimCoords coords);
std::string to_string(FimEstimator estimator);

struct FisherMatrix {
  Eigen::MatrixXd entries;
  /// Monte-Carlo standard error of each entry; zero for quadrature.
  Eigen::MatrixXd standard_error;
  std::vector<std::string> coordinate_names;
  /// Name of the coordinate system the entries are expressed in.
  std::string coordinates;
  FimEstimator estimator = FimEstimator::quadrature;
  /// Draws (Monte Carlo) or nodes per component (quadrature).
  std::size_t budget = 0;

  Eigen::Index dim() const noexcept { return entries.rows(); }
  bool is_symmetric(double tol = 1e-10) const;
  double min_eigenvalue() const;
  bool is_psd(double tol = 1e-8) const { return min_eigenvalue() >= -tol; }
};

/// Score of ln p(x) in the requested coordinates.  relative_means expects
/// `params` in canonical mean order and uses `spec` for the gap encoding.
Eigen::VectorXd coordinate_score(const MixtureParams& params, double x, FimCoords coords,
                                 const ReparamSpec& spec = {});

std::vector<std::string> coordinate_names(std::size_t k, FimCoords coords);

/// Fisher information E[s s^T].  Monte Carlo draws `budget` points with the
/// given seed; quadrature uses `budget` nodes per component.  Relative
/// coordinates are refused on the singular set (singularity_guard).
FisherMatrix fim_estimate(const MixtureParams& params, FimCoords coords, FimEstimator method,
                          std::size_t budget, std::uint64_t seed, const ReparamSpec& spec = {});

/// J^T I J with J_ij = d theta_i / d lambda_j.  Standard errors are not
/// propagated (the result carries an empty standard_error).
FisherMatrix transform_fim(const FisherMatrix& info, const Eigen::MatrixXd& jacobian,
                           std::vector<std::string> names = {},
                           std::string coordinates = "transformed");

/// delta^T I delta.
double length_element(const Eigen::MatrixXd& info, const Eigen::VectorXd& delta);
inline double length_element(const FisherMatrix& info, const Eigen::VectorXd& delta) {
  return length_element(info.entries, delta);
}

/// One-parameter exponential family described by its log-normalizer F and
/// the convex conjugate F*.
struct ExpFamilySpec {
  std::string name;
  std::function<double(double)> log_normalizer;
  std::function<double(double)> grad_log_normalizer;
  std::function<double(double)> hess_log_normalizer;
  std::function<double(double)> conjugate;
  std::function<double(double)> hess_conjugate;
  double domain_min = -1e300;
  double domain_max = 1e300;
};

/// F(theta) = theta^2 / 2, F*(eta) = eta^2 / 2.
ExpFamilySpec unit_gaussian_family();
/// F(theta) = ln(1 + e^theta), F*(eta) = eta ln eta + (1 - eta) ln(1 - eta).
ExpFamilySpec bernoulli_family();
/// F(theta) = e^theta, F*(eta) = eta ln eta - eta.
ExpFamilySpec poisson_family();
std::vector<ExpFamilySpec> exp_family_catalog();

enum class HessianMode { analytic, finite_difference };

/// |F''(theta) F*''(F'(theta)) - 1|.  The finite-difference mode
/// differentiates F* with central differences of step fd_step * max(1, |eta|).
double crouzeix_check(const ExpFamilySpec& family, double theta,
                      HessianMode mode = HessianMode::analytic, double fd_step = 1e-4);

/// Header line `# schema=1 kind=fisher coords=...`, a row of names,
/// then one CSV row per matrix row.
std::string fim_to_csv(const FisherMatrix& info);

}  // namespace relrep
