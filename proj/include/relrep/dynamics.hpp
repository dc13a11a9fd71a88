#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "relrep/gmm.hpp"
#include "relrep/reparam.hpp"

namespace relrep {

enum class Parameterization { original, relative };

std::string to_string(Parameterization p);
Parameterization parse_parameterization(const std::string& text);

/// Coordinates of the unit-variance two-component mixture.
///
/// original: u = mu1 - mu2, w = v mu1 + (1 - v) mu2
/// relative: u = Delta = mu2 - mu1 >= 0, w = v mu1 + (1 - v)(mu1 + Delta)
///
/// v is the mixing proportion of component 1.
struct UVWState {
  double v = 0.5;
  double u = 0.0;
  double w = 0.0;
  Parameterization parameterization = Parameterization::original;
};

struct MeanPair {
  double mu1 = 0.0;
  double mu2 = 0.0;
};

UVWState uvw_from_means(double v, double mu1, double mu2, Parameterization p);
MeanPair means_from_uvw(const UVWState& state);

/// Data-generating mixture; every component has unit variance.
class TrueModel {
 public:
  explicit TrueModel(MixtureParams params);

  const MixtureParams& params() const noexcept { return params_; }
  const MomentTable& moments() const noexcept { return moments_; }

 private:
  MixtureParams params_;
  MomentTable moments_;
};

/// Expected partials of the cubic-truncated log-likelihood in (v, u, w),
/// with x^m replaced by the raw moments of the true mixture.
Eigen::Vector3d base_partials(double v, double u, double w, const MomentTable& moments);
Eigen::Vector3d base_partials(const UVWState& state, const TrueModel& truth);

/// d(v, u, w)/d(v, mu1, mu2).
Eigen::Matrix3d jacobian_original(double v, double u);
/// d(v, Delta, w')/d(v, mu1, Delta).
Eigen::Matrix3d jacobian_relative(double v, double delta);

/// The symmetric matrices that combine expected partials into velocities;
/// each equals J J^T for the matching Jacobian above.
Eigen::Matrix3d velocity_combination_original(double v, double u);
Eigen::Matrix3d velocity_combination_relative(double v, double delta);

/// E[d(v, u, w)/dt] for gradient ascent on (v, mu1, mu2).
Eigen::Vector3d expected_velocity_original(const UVWState& state, const TrueModel& truth,
                                           double eta);
/// E[d(v, Delta, w')/dt] for gradient ascent on (v, mu1, Delta).  The
/// partials are taken at u = -Delta, w = w' with the sign of the u-partial
/// flipped (d/dDelta = -d/du).
Eigen::Vector3d expected_velocity_relative(const UVWState& state, const TrueModel& truth,
                                           double eta);

/// Velocity of (mu1, mu2) obtained by mapping the (v, u, w) velocity back
/// through the inverse Jacobian.
MeanPair mean_velocity(const UVWState& state, const Eigen::Vector3d& uvw_velocity);

struct GridAxis {
  double min = 0.0;
  double max = 0.0;
  double step = 1.0;

  std::size_t count() const;
  double at(std::size_t i) const;
};

struct FlowCell {
  double mu1 = 0.0;
  double mu2 = 0.0;
  double dmu1_dt = 0.0;
  double dmu2_dt = 0.0;
  /// Relative mode only: cell lies below the diagonal and was evaluated in
  /// the canonical order with labels swapped back afterwards.
  bool reflected = false;
};

struct FlowField {
  GridAxis mu1_axis;
  GridAxis mu2_axis;
  double v = 0.5;
  double eta = 1.0;
  MixtureParams truth;
  Parameterization parameterization = Parameterization::original;
  /// Row-major over (mu2, mu1): mu1 varies fastest.
  std::vector<FlowCell> cells;
};

FlowField flow_field(const GridAxis& mu1_axis, const GridAxis& mu2_axis, double v,
                     const TrueModel& truth, Parameterization p, double eta);

/// Expected (mu1, mu2) velocity at one point; what flow_field stores per cell.
FlowCell flow_at(double mu1, double mu2, double v, const TrueModel& truth, Parameterization p,
                 double eta);

enum class GradientSource { expected, empirical };

struct GdConfig {
  double eta = 0.1;
  std::size_t steps = 100;
  Parameterization parameterization = Parameterization::original;
  GradientSource source = GradientSource::expected;
  /// Encoding and clearance of Delta in relative mode.
  ReparamSpec reparam{OrderBy::mean, 0.0, DeltaEncoding::raw_constrained};
};

struct GdTarget {
  std::optional<MixtureParams> truth;
  std::optional<Dataset> data;
};

struct TrajectoryPoint {
  std::size_t step = 0;
  double mu1 = 0.0;
  double mu2 = 0.0;
  /// mu2 - mu1.
  double delta = 0.0;
  /// Average log-likelihood: over the data (empirical) or under the truth.
  double loglik = 0.0;
  double dist_to_true = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  bool diverged = false;
};

/// Euler steps on the two means of a two-component mixture; weights and
/// sigmas stay at the values in `init`.  Expected mode requires unit
/// variances and a truth; empirical mode uses the exact sample-average score.
Trajectory integrate_gd(const MixtureParams& init, const GdTarget& target, const GdConfig& config);

/// E_truth[ln p(x | params)] by the quadrature grid used for Fisher matrices.
double expected_log_likelihood(const MixtureParams& params, const MixtureParams& truth);

}  // namespace relrep
