#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace relrep {

/// Univariate Gaussian mixture in absolute coordinates.
///
/// Weights are stored as the full simplex vector.  For two components the
/// second weight is always derived as 1 - pi_1 by the constructors below.
struct MixtureParams {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> sigmas;

  std::size_t size() const noexcept { return means.size(); }

  /// Throws Error(argument) unless the invariants hold: K >= 1, equal block
  /// lengths, weights on the simplex (sum within 1e-12), sigmas > 0, finite.
  void validate() const;

  static MixtureParams make(std::vector<double> weights, std::vector<double> means,
                            std::vector<double> sigmas);
  /// Two components with pi_2 := 1 - pi_1.
  static MixtureParams two(double pi1, double mu1, double mu2, double sigma1 = 1.0,
                           double sigma2 = 1.0);
};

struct Dataset {
  std::vector<double> points;
  std::optional<std::uint64_t> seed;

  std::size_t size() const noexcept { return points.size(); }
  void validate() const;
};

/// Raw moments E[x^0] .. E[x^3]; entries above `order` are zero.
struct MomentTable {
  std::array<double, 4> raw{1.0, 0.0, 0.0, 0.0};
  int order = 3;

  double operator[](int m) const { return raw.at(static_cast<std::size_t>(m)); }
};

/// Gradient of ln p(x) over the free coordinates: pi_1..pi_{K-1} (pi_K is
/// the complement), then mu_1..mu_K, then sigma_1..sigma_K.
struct Score {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> sigmas;

  std::vector<double> flat() const;
};

double log_normal_pdf(double x, double mean, double sigma) noexcept;

double log_density(const MixtureParams& params, double x);
double density(const MixtureParams& params, double x);
double log_likelihood(const MixtureParams& params, std::span<const double> points);
inline double log_likelihood(const MixtureParams& params, const Dataset& data) {
  return log_likelihood(params, std::span<const double>(data.points));
}

/// Per-component log(pi_k N(x | mu_k, sigma_k)) and their log-sum-exp.
double component_log_terms(const MixtureParams& params, double x, std::span<double> out);

Score score(const MixtureParams& params, double x);

Dataset sample(const MixtureParams& params, std::size_t n, std::uint64_t seed);

MomentTable mixture_moments(const MixtureParams& params, int order = 3);

double log_sum_exp(std::span<const double> values) noexcept;

// Flat key-value text record:
//   K = 2
//   pi = 0.5 0.5
//   mu = -5.1 -5
//   sigma = 1 1
std::string format_params(const MixtureParams& params);
MixtureParams parse_params(const std::string& text);

/// One value per line.
std::string format_dataset(const Dataset& data);
Dataset parse_dataset(const std::string& text);

/// Shortest round-trip decimal form; used by every text/CSV emitter.
std::string format_double(double value);

}  // namespace relrep
