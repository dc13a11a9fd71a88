#include "relrep/reparam.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "relrep/error.hpp"

namespace relrep {

std::string to_string(OrderBy order) { return order == OrderBy::mean ? "mean" : "sigma"; }

std::string to_string(DeltaEncoding encoding) {
  return encoding == DeltaEncoding::raw_constrained ? "raw_constrained" : "squared";
}

OrderBy parse_order_by(const std::string& text) {
  if (text == "mean") return OrderBy::mean;
  if (text == "sigma") return OrderBy::sigma;
  fail(ErrorCode::argument, "unknown ordering coordinate `" + text + "` (mean | sigma)");
}

DeltaEncoding parse_encoding(const std::string& text) {
  if (text == "raw_constrained" || text == "raw") return DeltaEncoding::raw_constrained;
  if (text == "squared") return DeltaEncoding::squared;
  fail(ErrorCode::argument, "unknown delta encoding `" + text + "` (raw_constrained | squared)");
}

void ReparamSpec::validate() const {
  if (!(clearance >= 0.0) || !std::isfinite(clearance)) {
    fail(ErrorCode::argument, "clearance must be finite and >= 0");
  }
}

namespace {

const std::vector<double>& ordered_block(const MixtureParams& p, OrderBy order) {
  return order == OrderBy::mean ? p.means : p.sigmas;
}

const std::vector<double>& other_block(const MixtureParams& p, OrderBy order) {
  return order == OrderBy::mean ? p.sigmas : p.means;
}

std::vector<std::size_t> sort_permutation(const MixtureParams& p, OrderBy order) {
  std::vector<std::size_t> perm(p.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  const auto& key = ordered_block(p, order);
  const auto& other = other_block(p, order);
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(key[a], other[a], p.weights[a]) < std::tie(key[b], other[b], p.weights[b]);
  });
  return perm;
}

}  // namespace

double decoded_delta(const RelativeParams& rel, const ReparamSpec& spec, std::size_t i) {
  const double stored = rel.deltas.at(i);
  return spec.encoding == DeltaEncoding::squared ? stored * stored : stored;
}

double decoded_gap(const RelativeParams& rel, const ReparamSpec& spec, std::size_t i) {
  return decoded_delta(rel, spec, i) + spec.clearance;
}

double encode_delta(double delta, const ReparamSpec& spec) {
  return spec.encoding == DeltaEncoding::squared ? std::sqrt(delta) : delta;
}

MixtureParams canonical_order(const MixtureParams& params, OrderBy order) {
  const auto perm = sort_permutation(params, order);
  MixtureParams out;
  for (std::size_t k : perm) {
    out.weights.push_back(params.weights[k]);
    out.means.push_back(params.means[k]);
    out.sigmas.push_back(params.sigmas[k]);
  }
  return out;
}

RelativeParams to_relative(const MixtureParams& params, const ReparamSpec& spec) {
  params.validate();
  spec.validate();
  RelativeParams rel;
  rel.permutation = sort_permutation(params, spec.order_by);
  const auto& key = ordered_block(params, spec.order_by);
  const auto& other = other_block(params, spec.order_by);
  for (std::size_t k : rel.permutation) {
    rel.weights.push_back(params.weights[k]);
    rel.other.push_back(other[k]);
  }
  rel.reference_value = key[rel.permutation.front()];
  for (std::size_t i = 0; i + 1 < rel.permutation.size(); ++i) {
    const std::size_t a = rel.permutation[i];
    const std::size_t b = rel.permutation[i + 1];
    const double gap = key[b] - key[a];
    if (spec.clearance > 0.0 && gap == 0.0) {
      fail(ErrorCode::not_identifiable,
           "components " + std::to_string(a + 1) + " and " + std::to_string(b + 1) + " share " +
               to_string(spec.order_by) + " " + format_double(key[a]) +
               "; not strongly identifiable with clearance " + format_double(spec.clearance));
    }
    if (gap < spec.clearance) {
      fail(ErrorCode::not_identifiable,
           "gap " + format_double(gap) + " between components " + std::to_string(a + 1) +
               " and " + std::to_string(b + 1) + " is below the clearance " +
               format_double(spec.clearance));
    }
    rel.deltas.push_back(encode_delta(gap - spec.clearance, spec));
  }
  return rel;
}

MixtureParams to_absolute(const RelativeParams& rel, const ReparamSpec& spec, LabelOrder labels) {
  spec.validate();
  const std::size_t k = rel.size();
  if (k == 0 || rel.deltas.size() + 1 != k || rel.other.size() != k) {
    fail(ErrorCode::argument, "relative parameters have inconsistent block sizes");
  }
  std::vector<double> ordered(k);
  ordered[0] = rel.reference_value;
  for (std::size_t i = 1; i < k; ++i) {
    if (spec.encoding == DeltaEncoding::raw_constrained && rel.deltas[i - 1] < 0.0) {
      fail(ErrorCode::argument, "raw delta below zero");
    }
    ordered[i] = ordered[i - 1] + decoded_gap(rel, spec, i - 1);
  }
  MixtureParams sorted;
  sorted.weights = rel.weights;
  if (spec.order_by == OrderBy::mean) {
    sorted.means = ordered;
    sorted.sigmas = rel.other;
  } else {
    sorted.sigmas = ordered;
    sorted.means = rel.other;
  }
  if (labels == LabelOrder::canonical) return sorted;
  if (rel.permutation.size() != k) fail(ErrorCode::argument, "missing label permutation");
  MixtureParams out;
  out.weights.resize(k);
  out.means.resize(k);
  out.sigmas.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t label = rel.permutation[i];
    out.weights[label] = sorted.weights[i];
    out.means[label] = sorted.means[i];
    out.sigmas[label] = sorted.sigmas[i];
  }
  return out;
}

bool same_point(const RelativeParams& a, const RelativeParams& b, double tol) {
  auto close = [tol](double x, double y) { return std::abs(x - y) <= tol; };
  auto close_all = [&](const std::vector<double>& x, const std::vector<double>& y) {
    return x.size() == y.size() && std::equal(x.begin(), x.end(), y.begin(), close);
  };
  return close(a.reference_value, b.reference_value) && close_all(a.deltas, b.deltas) &&
         close_all(a.weights, b.weights) && close_all(a.other, b.other);
}

Eigen::MatrixXd jacobian(const RelativeParams& rel, const ReparamSpec& spec) {
  const auto k = static_cast<Eigen::Index>(rel.size());
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index row = 0; row < k; ++row) {
    j(row, 0) = 1.0;
    for (Eigen::Index i = 0; i < row; ++i) {
      j(row, i + 1) = spec.encoding == DeltaEncoding::squared
                          ? 2.0 * rel.deltas[static_cast<std::size_t>(i)]
                          : 1.0;
    }
  }
  return j;
}

SingularityReport classify_singularities(const MixtureParams& params, double tol) {
  if (!(tol > 0.0)) fail(ErrorCode::argument, "singularity tolerance must be positive");
  params.validate();
  SingularityReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params.weights[k] <= tol) report.elimination_hits.push_back({k, std::abs(params.weights[k])});
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t j = i + 1; j < params.size(); ++j) {
      const double dmu = std::abs(params.means[i] - params.means[j]);
      const double dsigma = std::abs(params.sigmas[i] - params.sigmas[j]);
      if (dmu <= tol && dsigma <= tol) report.overlap_hits.push_back({i, j, std::max(dmu, dsigma)});
    }
  }
  return report;
}

}  // namespace relrep
