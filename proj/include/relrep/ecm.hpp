#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "relrep/gmm.hpp"
#include "relrep/reparam.hpp"

namespace relrep {

/// N x K posterior matrix, row-major.
class Responsibilities {
 public:
  Responsibilities() = default;
  Responsibilities(std::size_t n, std::size_t k) : n_(n), k_(k), gamma_(n * k, 0.0) {}

  std::size_t rows() const noexcept { return n_; }
  std::size_t cols() const noexcept { return k_; }
  double& operator()(std::size_t n, std::size_t k) { return gamma_[n * k_ + k]; }
  double operator()(std::size_t n, std::size_t k) const { return gamma_[n * k_ + k]; }

  /// Sum over points of column k.
  double mass(std::size_t k) const;

 private:
  std::size_t n_ = 0;
  std::size_t k_ = 0;
  std::vector<double> gamma_;
};

Responsibilities e_step(const MixtureParams& params, const Dataset& data);

struct FrozenBlocks {
  bool weights = false;
  bool sigmas = false;
};

/// Closed-form maximizer of Q.  Blocks marked frozen are copied from
/// `current`; the one-argument form updates everything.
MixtureParams m_step_standard(const Responsibilities& gamma, const Dataset& data);
MixtureParams m_step_standard(const Responsibilities& gamma, const Dataset& data,
                              const MixtureParams& current, FrozenBlocks frozen);

/// sum_n sum_k gamma_nk [ln pi_k + ln N(x_n | mu_k, sigma_k)].
double q_function(const MixtureParams& params, const Responsibilities& gamma,
                  const Dataset& data);

/// Maximizer of Q over the reference mean with the gaps held fixed.
/// Component k sits at mu1 + sum_{i<k} gaps[i]; sigmas weight the points
/// by 1/sigma_k^2 (unit sigmas when empty).
double cm_step_reference_mean(const Responsibilities& gamma, const Dataset& data,
                              const std::vector<double>& gaps,
                              const std::vector<double>& sigmas = {});
/// Two-component form: gap = delta + clearance.
double cm_step_reference_mean(const Responsibilities& gamma, const Dataset& data, double delta,
                              double clearance = 0.0);

struct DeltaStep {
  /// Projected maximizer, >= 0.
  double delta = 0.0;
  /// Maximizer without the constraint.
  double unconstrained = 0.0;
  /// KKT multiplier of Delta >= 0 for maximizing Q; positive exactly when
  /// the constraint is active.
  double multiplier = 0.0;

  bool active() const noexcept { return multiplier > 0.0; }
};

/// Maximizer of Q over Delta_index subject to Delta_index >= 0, holding the
/// reference mean and the other gaps fixed.
DeltaStep cm_step_delta(const Responsibilities& gamma, const Dataset& data, double mu1,
                        const std::vector<double>& gaps, std::size_t index, double clearance,
                        const std::vector<double>& sigmas = {});
/// Two-component form.
DeltaStep cm_step_delta(const Responsibilities& gamma, const Dataset& data, double mu1,
                        double clearance = 0.0);

struct ECMConfig {
  double epsilon = 1e-8;
  std::size_t max_iters = 10000;
  FrozenBlocks fixed{true, true};
  /// Slack allowed when checking KKT feasibility of each iterate.
  double lagrange_tol = 1e-12;

  void validate() const;
};

struct IterationRecord {
  std::size_t iteration = 0;
  /// Means in the labels of the fit (canonical order for the relative run).
  MixtureParams params;
  double reference_mean = 0.0;
  /// Decoded gaps mu_{k+1} - mu_k.
  std::vector<double> gaps;
  double loglik = 0.0;
  std::optional<double> dist_to_true;
};

struct FitResult {
  MixtureParams final_params;
  RelativeParams final_relative;
  std::vector<IterationRecord> trajectory;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Euclidean distance between mean vectors, matched label by label.
double mean_distance(const MixtureParams& a, const MixtureParams& b);

/// ECM in relative coordinates: E-step, then the reference mean, then each
/// gap in turn, until the log-likelihood changes by at most epsilon.
/// Weights and sigmas stay fixed.  The mean ordering is the one in `spec`.
FitResult fit_ecm_relative(const Dataset& data, const RelativeParams& init,
                           const ReparamSpec& spec, const ECMConfig& config,
                           const std::optional<MixtureParams>& truth = std::nullopt);

/// Standard EM; blocks in config.fixed are not updated.
FitResult fit_em_standard(const Dataset& data, const MixtureParams& init, const ECMConfig& config,
                          const std::optional<MixtureParams>& truth = std::nullopt);

}  // namespace relrep
