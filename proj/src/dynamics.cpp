#include "relrep/dynamics.hpp"

#include <cmath>

#include "relrep/error.hpp"
#include "relrep/quadrature.hpp"

namespace relrep {

std::string to_string(Parameterization p) {
  return p == Parameterization::original ? "original" : "relative";
}

Parameterization parse_parameterization(const std::string& text) {
  if (text == "original") return Parameterization::original;
  if (text == "relative") return Parameterization::relative;
  fail(ErrorCode::argument, "unknown parameterization `" + text + "` (original | relative)");
}

UVWState uvw_from_means(double v, double mu1, double mu2, Parameterization p) {
  if (!(v > 0.0 && v < 1.0)) fail(ErrorCode::argument, "mixing proportion v must lie in (0, 1)");
  if (p == Parameterization::original) {
    return {v, mu1 - mu2, v * mu1 + (1.0 - v) * mu2, p};
  }
  const double delta = mu2 - mu1;
  if (delta < 0.0) fail(ErrorCode::argument, "relative coordinates need mu1 <= mu2");
  return {v, delta, v * mu1 + (1.0 - v) * (mu1 + delta), p};
}

MeanPair means_from_uvw(const UVWState& s) {
  if (s.parameterization == Parameterization::original) {
    return {s.w + (1.0 - s.v) * s.u, s.w - s.v * s.u};
  }
  const double mu1 = s.w - (1.0 - s.v) * s.u;
  return {mu1, mu1 + s.u};
}

TrueModel::TrueModel(MixtureParams params) : params_(std::move(params)) {
  params_.validate();
  for (double sigma : params_.sigmas) {
    if (std::abs(sigma - 1.0) > 1e-12) {
      fail(ErrorCode::argument, "the averaged dynamics assume unit-variance true components");
    }
  }
  moments_ = mixture_moments(params_, 3);
}

Eigen::Vector3d base_partials(double v, double u, double w, const MomentTable& m) {
  const double m1 = m[1];
  const double m2 = m[2];
  const double m3 = m[3];
  // E[w^2 - 2wx + x^2 - 1]
  const double quad = w * w - 2.0 * w * m1 + m2 - 1.0;
  // E[w^3 - 3w^2 x + 3w(x^2 - 1) - x(x^2 - 3)]
  const double cubic = w * w * w - 3.0 * w * w * m1 + 3.0 * w * (m2 - 1.0) - (m3 - 3.0 * m1);
  // E[(x - w)^3 + 3(w - x)]
  const double cubic_u = m3 - 3.0 * w * m2 + 3.0 * w * w * m1 - w * w * w + 3.0 * (w - m1);

  const double u2 = u * u;
  const double u3 = u2 * u;
  const double skew = 2.0 * v * v - 3.0 * v + 1.0;

  const double d_v = -0.5 * u2 * (2.0 * v - 1.0) * quad -
                     0.5 * u3 * (6.0 * v * v - 6.0 * v + 1.0) * cubic;
  const double d_u = u * (1.0 - v) * v * quad + 1.5 * u2 * v * skew * cubic_u;
  const double d_w = m1 - w + u2 * (1.0 - v) * v * (w - m1) - 1.5 * u3 * v * skew * quad;
  return {d_v, d_u, d_w};
}

Eigen::Vector3d base_partials(const UVWState& state, const TrueModel& truth) {
  if (state.parameterization != Parameterization::original) {
    fail(ErrorCode::argument, "base partials are defined in original (v, u, w) coordinates");
  }
  return base_partials(state.v, state.u, state.w, truth.moments());
}

Eigen::Matrix3d jacobian_original(double v, double u) {
  Eigen::Matrix3d j;
  j << 1.0, 0.0, 0.0,
       0.0, 1.0, -1.0,
       u, v, 1.0 - v;
  return j;
}

Eigen::Matrix3d jacobian_relative(double v, double delta) {
  Eigen::Matrix3d j;
  j << 1.0, 0.0, 0.0,
       0.0, 0.0, 1.0,
       -delta, 1.0, 1.0 - v;
  return j;
}

Eigen::Matrix3d velocity_combination_original(double v, double u) {
  Eigen::Matrix3d c;
  c << 1.0, 0.0, u,
       0.0, 2.0, 2.0 * v - 1.0,
       u, 2.0 * v - 1.0, u * u + v * v + (1.0 - v) * (1.0 - v);
  return c;
}

Eigen::Matrix3d velocity_combination_relative(double v, double delta) {
  const double rest = 1.0 - v;
  Eigen::Matrix3d c;
  c << 1.0, 0.0, -delta,
       0.0, 1.0, rest,
       -delta, rest, delta * delta + 1.0 + rest * rest;
  return c;
}

Eigen::Vector3d expected_velocity_original(const UVWState& state, const TrueModel& truth,
                                           double eta) {
  const Eigen::Vector3d g = base_partials(state, truth);
  return eta * velocity_combination_original(state.v, state.u) * g;
}

Eigen::Vector3d expected_velocity_relative(const UVWState& state, const TrueModel& truth,
                                           double eta) {
  if (state.parameterization != Parameterization::relative) {
    fail(ErrorCode::argument, "expected a state in relative coordinates");
  }
  if (state.u < 0.0) fail(ErrorCode::argument, "relative state needs Delta >= 0");
  const double delta = state.u;
  Eigen::Vector3d g = base_partials(state.v, -delta, state.w, truth.moments());
  g[1] = -g[1];
  return eta * velocity_combination_relative(state.v, delta) * g;
}

MeanPair mean_velocity(const UVWState& state, const Eigen::Vector3d& uvw_velocity) {
  if (state.parameterization == Parameterization::original) {
    const Eigen::Vector3d theta =
        jacobian_original(state.v, state.u).partialPivLu().solve(uvw_velocity);
    return {theta[1], theta[2]};
  }
  const Eigen::Vector3d theta =
      jacobian_relative(state.v, state.u).partialPivLu().solve(uvw_velocity);
  return {theta[1], theta[1] + theta[2]};
}

std::size_t GridAxis::count() const {
  if (!std::isfinite(min) || !std::isfinite(max) || !std::isfinite(step) || !(step > 0.0) ||
      max < min) {
    fail(ErrorCode::argument, "grid axis needs finite min <= max and step > 0");
  }
  return static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
}

double GridAxis::at(std::size_t i) const { return min + step * static_cast<double>(i); }

FlowCell flow_at(double mu1, double mu2, double v, const TrueModel& truth, Parameterization p,
                 double eta) {
  FlowCell cell{mu1, mu2, 0.0, 0.0, false};
  if (p == Parameterization::original) {
    const UVWState s = uvw_from_means(v, mu1, mu2, p);
    const MeanPair d = mean_velocity(s, expected_velocity_original(s, truth, eta));
    cell.dmu1_dt = d.mu1;
    cell.dmu2_dt = d.mu2;
    return cell;
  }
  if (mu2 >= mu1) {
    const UVWState s = uvw_from_means(v, mu1, mu2, p);
    const MeanPair d = mean_velocity(s, expected_velocity_relative(s, truth, eta));
    cell.dmu1_dt = d.mu1;
    cell.dmu2_dt = d.mu2;
    return cell;
  }
  // Below the diagonal: the component at mu2 becomes the reference and
  // carries weight 1 - v.
  const UVWState s = uvw_from_means(1.0 - v, mu2, mu1, p);
  const MeanPair d = mean_velocity(s, expected_velocity_relative(s, truth, eta));
  cell.dmu1_dt = d.mu2;
  cell.dmu2_dt = d.mu1;
  cell.reflected = true;
  return cell;
}

FlowField flow_field(const GridAxis& mu1_axis, const GridAxis& mu2_axis, double v,
                     const TrueModel& truth, Parameterization p, double eta) {
  const std::size_t n1 = mu1_axis.count();
  const std::size_t n2 = mu2_axis.count();
  if (!(v > 0.0 && v < 1.0)) fail(ErrorCode::argument, "mixing proportion v must lie in (0, 1)");
  FlowField field;
  field.mu1_axis = mu1_axis;
  field.mu2_axis = mu2_axis;
  field.v = v;
  field.eta = eta;
  field.truth = truth.params();
  field.parameterization = p;
  field.cells.reserve(n1 * n2);
  for (std::size_t j = 0; j < n2; ++j) {
    for (std::size_t i = 0; i < n1; ++i) {
      field.cells.push_back(flow_at(mu1_axis.at(i), mu2_axis.at(j), v, truth, p, eta));
    }
  }
  return field;
}

double expected_log_likelihood(const MixtureParams& params, const MixtureParams& truth) {
  double total = 0.0;
  for (const auto& node : mixture_quadrature(truth)) {
    total += node.weight * log_density(params, node.x);
  }
  return total;
}

namespace {

struct GdState {
  double mu1 = 0.0;
  /// Original mode: mu2.  Relative mode: the stored (encoded) delta.
  double second = 0.0;
};

}  // namespace

Trajectory integrate_gd(const MixtureParams& init, const GdTarget& target, const GdConfig& config) {
  init.validate();
  if (init.size() != 2) fail(ErrorCode::argument, "gradient dynamics are defined for K = 2");
  if (!(config.eta > 0.0)) fail(ErrorCode::argument, "learning rate must be positive");
  if (config.steps < 1) fail(ErrorCode::argument, "need at least one step");
  config.reparam.validate();
  const bool relative = config.parameterization == Parameterization::relative;
  const bool expected = config.source == GradientSource::expected;

  std::optional<TrueModel> truth_model;
  if (expected) {
    if (!target.truth) fail(ErrorCode::argument, "expected gradients need the true mixture");
    truth_model.emplace(*target.truth);
    for (double s : init.sigmas) {
      if (std::abs(s - 1.0) > 1e-12) {
        fail(ErrorCode::argument, "expected gradients assume unit-variance components");
      }
    }
  } else {
    if (!target.data) fail(ErrorCode::argument, "empirical gradients need a dataset");
    target.data->validate();
  }

  MixtureParams params = init;
  std::optional<MixtureParams> truth = target.truth;
  ReparamSpec spec = config.reparam;
  spec.order_by = OrderBy::mean;
  GdState state;
  if (relative) {
    params = canonical_order(init);
    if (truth) *truth = canonical_order(*truth);
    const RelativeParams rel = to_relative(params, spec);
    state = {rel.reference_value, rel.deltas[0]};
  } else {
    state = {params.means[0], params.means[1]};
  }
  const double v = params.weights[0];

  auto gap_of = [&](const GdState& s) {
    const double d = spec.encoding == DeltaEncoding::squared ? s.second * s.second : s.second;
    return d + spec.clearance;
  };
  auto means_of = [&](const GdState& s) -> MeanPair {
    return relative ? MeanPair{s.mu1, s.mu1 + gap_of(s)} : MeanPair{s.mu1, s.second};
  };

  Trajectory traj;
  for (std::size_t step = 0;; ++step) {
    const MeanPair m = means_of(state);
    params.means = {m.mu1, m.mu2};
    TrajectoryPoint point;
    point.step = step;
    point.mu1 = m.mu1;
    point.mu2 = m.mu2;
    point.delta = m.mu2 - m.mu1;
    if (!std::isfinite(m.mu1) || !std::isfinite(m.mu2)) {
      traj.diverged = true;
      break;
    }
    point.loglik = expected ? expected_log_likelihood(params, *truth)
                            : log_likelihood(params, *target.data) /
                                  static_cast<double>(target.data->size());
    if (truth) point.dist_to_true = std::hypot(m.mu1 - truth->means[0], m.mu2 - truth->means[1]);
    traj.points.push_back(point);
    if (step == config.steps) break;

    // Velocities of (mu1, mu2) with eta folded in.
    double d_mu1 = 0.0;
    double d_mu2 = 0.0;
    if (expected) {
      if (relative) {
        const UVWState s = uvw_from_means(v, m.mu1, m.mu2, Parameterization::relative);
        const MeanPair d = mean_velocity(s, expected_velocity_relative(s, *truth_model, config.eta));
        d_mu1 = d.mu1;
        d_mu2 = d.mu2;
      } else {
        const UVWState s = uvw_from_means(v, m.mu1, m.mu2, Parameterization::original);
        const MeanPair d = mean_velocity(s, expected_velocity_original(s, *truth_model, config.eta));
        d_mu1 = d.mu1;
        d_mu2 = d.mu2;
      }
    } else {
      double g1 = 0.0;
      double g2 = 0.0;
      for (double x : target.data->points) {
        const Score s = score(params, x);
        g1 += s.means[0];
        g2 += s.means[1];
      }
      const double n = static_cast<double>(target.data->size());
      g1 /= n;
      g2 /= n;
      // Relative coordinates (mu1, gap): d/dmu1 = g1 + g2, d/dgap = g2.
      d_mu1 = config.eta * (relative ? g1 + g2 : g1);
      d_mu2 = config.eta * (relative ? g1 + 2.0 * g2 : g2);
    }

    if (relative) {
      const double d_gap = d_mu2 - d_mu1;
      state.mu1 += d_mu1;
      if (spec.encoding == DeltaEncoding::squared) {
        state.second += 2.0 * state.second * d_gap;
      } else {
        state.second = std::max(state.second + d_gap, 0.0);
      }
    } else {
      state.mu1 += d_mu1;
      state.second += d_mu2;
    }
  }
  return traj;
}

}  // namespace relrep
