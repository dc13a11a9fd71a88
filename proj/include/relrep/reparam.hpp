#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "relrep/gmm.hpp"

namespace relrep {

enum class OrderBy { mean, sigma };
enum class DeltaEncoding { raw_constrained, squared };

std::string to_string(OrderBy order);
std::string to_string(DeltaEncoding encoding);
OrderBy parse_order_by(const std::string& text);
DeltaEncoding parse_encoding(const std::string& text);

struct ReparamSpec {
  OrderBy order_by = OrderBy::mean;
  /// Minimum enforced gap between consecutive ordered parameters.
  double clearance = 0.0;
  DeltaEncoding encoding = DeltaEncoding::squared;

  void validate() const;
};

/// Mixture in relative coordinates: the smallest ordered parameter, K-1
/// encoded consecutive gaps, and the remaining blocks carried in sorted
/// order.  `permutation[k]` is the original label of the k-th sorted
/// component.
struct RelativeParams {
  double reference_value = 0.0;
  /// Raw: Delta_i >= 0.  Squared: d_i with Delta_i = d_i^2.
  std::vector<double> deltas;
  std::vector<double> weights;
  /// The block that is not ordered (sigmas when ordering by mean, and vice versa).
  std::vector<double> other;
  std::vector<std::size_t> permutation;

  std::size_t size() const noexcept { return weights.size(); }
};

/// Decoded gap between sorted components i and i+1 (includes the clearance).
double decoded_gap(const RelativeParams& rel, const ReparamSpec& spec, std::size_t i);
/// Decoded Delta_i without clearance.
double decoded_delta(const RelativeParams& rel, const ReparamSpec& spec, std::size_t i);
/// Encodes a nonnegative Delta into the storage form of `spec.encoding`.
double encode_delta(double delta, const ReparamSpec& spec);

RelativeParams to_relative(const MixtureParams& params, const ReparamSpec& spec);

enum class LabelOrder { canonical, original };

/// Canonical order lists components sorted by the ordering coordinate;
/// original order undoes the recorded permutation.
MixtureParams to_absolute(const RelativeParams& rel, const ReparamSpec& spec,
                          LabelOrder labels = LabelOrder::canonical);

/// Same representative point, ignoring the recorded permutation.
bool same_point(const RelativeParams& a, const RelativeParams& b, double tol = 0.0);

/// K x K Jacobian d(ordered block)/d(reference, encoded deltas), lower
/// triangular.
Eigen::MatrixXd jacobian(const RelativeParams& rel, const ReparamSpec& spec);

/// Components sorted by mean (ties by sigma, then weight).
MixtureParams canonical_order(const MixtureParams& params, OrderBy order = OrderBy::mean);

struct EliminationHit {
  std::size_t component;
  double weight;
};

struct OverlapHit {
  std::size_t i;
  std::size_t j;
  double gap;
};

struct SingularityReport {
  std::vector<EliminationHit> elimination_hits;
  std::vector<OverlapHit> overlap_hits;

  bool is_identifiable() const noexcept {
    return elimination_hits.empty() && overlap_hits.empty();
  }
};

inline constexpr double kDefaultSingularityTol = 1e-8;

/// Elimination: pi_k <= tol.  Overlap: |mu_i - mu_j| <= tol and
/// |sigma_i - sigma_j| <= tol.  Indices are zero-based.
SingularityReport classify_singularities(const MixtureParams& params,
                                         double tol = kDefaultSingularityTol);

}  // namespace relrep
