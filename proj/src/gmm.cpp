#include "relrep/gmm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "relrep/error.hpp"
#include "relrep/kvtext.hpp"
#include "relrep/rng.hpp"

namespace relrep {

namespace {

constexpr double kSimplexTol = 1e-12;
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ' ';
    out += format_double(values[i]);
  }
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

void MixtureParams::validate() const {
  const std::size_t k = means.size();
  if (k == 0) fail(ErrorCode::argument, "mixture needs at least one component");
  if (weights.size() != k || sigmas.size() != k) {
    fail(ErrorCode::argument, "mixture blocks differ in length");
  }
  if (!all_finite(weights) || !all_finite(means) || !all_finite(sigmas)) {
    fail(ErrorCode::argument, "mixture parameters must be finite");
  }
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) fail(ErrorCode::argument, "mixture weight below zero");
    total += w;
  }
  if (std::abs(total - 1.0) > kSimplexTol) {
    fail(ErrorCode::argument, "mixture weights sum to " + format_double(total) + ", not 1");
  }
  for (double s : sigmas) {
    if (!(s > 0.0)) fail(ErrorCode::argument, "mixture sigma must be positive");
  }
}

MixtureParams MixtureParams::make(std::vector<double> weights, std::vector<double> means,
                                  std::vector<double> sigmas) {
  MixtureParams p{std::move(weights), std::move(means), std::move(sigmas)};
  p.validate();
  return p;
}

MixtureParams MixtureParams::two(double pi1, double mu1, double mu2, double sigma1,
                                 double sigma2) {
  return make({pi1, 1.0 - pi1}, {mu1, mu2}, {sigma1, sigma2});
}

void Dataset::validate() const {
  if (points.empty()) fail(ErrorCode::argument, "dataset is empty");
  if (!all_finite(points)) fail(ErrorCode::argument, "dataset has non-finite entries");
}

std::vector<double> Score::flat() const {
  std::vector<double> out;
  out.reserve(weights.size() + means.size() + sigmas.size());
  out.insert(out.end(), weights.begin(), weights.end());
  out.insert(out.end(), means.begin(), means.end());
  out.insert(out.end(), sigmas.begin(), sigmas.end());
  return out;
}

double log_normal_pdf(double x, double mean, double sigma) noexcept {
  const double z = (x - mean) / sigma;
  return -kHalfLog2Pi - std::log(sigma) - 0.5 * z * z;
}

double log_sum_exp(std::span<const double> values) noexcept {
  double top = -std::numeric_limits<double>::infinity();
  for (double v : values) top = std::max(top, v);
  if (!std::isfinite(top)) return top;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - top);
  return top + std::log(sum);
}

double component_log_terms(const MixtureParams& params, double x, std::span<double> out) {
  if (!std::isfinite(x)) fail(ErrorCode::domain, "density evaluated at a non-finite point");
  for (std::size_t k = 0; k < params.size(); ++k) {
    out[k] = (params.weights[k] > 0.0 ? std::log(params.weights[k])
                                      : -std::numeric_limits<double>::infinity()) +
             log_normal_pdf(x, params.means[k], params.sigmas[k]);
  }
  return log_sum_exp(out.first(params.size()));
}

double log_density(const MixtureParams& params, double x) {
  std::vector<double> terms(params.size());
  return component_log_terms(params, x, terms);
}

double density(const MixtureParams& params, double x) { return std::exp(log_density(params, x)); }

double log_likelihood(const MixtureParams& params, std::span<const double> points) {
  if (points.empty()) fail(ErrorCode::argument, "log-likelihood of an empty dataset");
  std::vector<double> terms(params.size());
  double total = 0.0;
  for (double x : points) total += component_log_terms(params, x, terms);
  return total;
}

Score score(const MixtureParams& params, double x) {
  const std::size_t k = params.size();
  std::vector<double> terms(k);
  const double log_p = component_log_terms(params, x, terms);
  Score s;
  s.weights.resize(k - 1);
  s.means.resize(k);
  s.sigmas.resize(k);
  const double last_ratio = std::exp(log_normal_pdf(x, params.means[k - 1], params.sigmas[k - 1]) -
                                     log_p);
  for (std::size_t j = 0; j + 1 < k; ++j) {
    s.weights[j] =
        std::exp(log_normal_pdf(x, params.means[j], params.sigmas[j]) - log_p) - last_ratio;
  }
  for (std::size_t j = 0; j < k; ++j) {
    const double resp = std::exp(terms[j] - log_p);
    const double sigma = params.sigmas[j];
    const double d = x - params.means[j];
    s.means[j] = resp * d / (sigma * sigma);
    s.sigmas[j] = resp * (d * d / (sigma * sigma * sigma) - 1.0 / sigma);
  }
  return s;
}

Dataset sample(const MixtureParams& params, std::size_t n, std::uint64_t seed) {
  if (n == 0) fail(ErrorCode::argument, "sample size must be at least 1");
  params.validate();
  Rng rng(seed);
  std::vector<double> cumulative(params.size());
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    acc += params.weights[k];
    cumulative[k] = acc;
    if (params.weights[k] > 0.0) last_positive = k;
  }
  Dataset data;
  data.seed = seed;
  data.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform();
    std::size_t k = last_positive;
    for (std::size_t j = 0; j < params.size(); ++j) {
      if (params.weights[j] > 0.0 && u < cumulative[j]) {
        k = j;
        break;
      }
    }
    data.points.push_back(rng.normal(params.means[k], params.sigmas[k]));
  }
  return data;
}

MomentTable mixture_moments(const MixtureParams& params, int order) {
  if (order < 0 || order > 3) {
    fail(ErrorCode::unsupported_order,
         "raw moments are available up to order 3, requested " + std::to_string(order));
  }
  MomentTable table;
  table.order = order;
  table.raw = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double pi = params.weights[k];
    const double mu = params.means[k];
    const double s2 = params.sigmas[k] * params.sigmas[k];
    const std::array<double, 4> m{1.0, mu, mu * mu + s2, mu * mu * mu + 3.0 * mu * s2};
    for (int j = 0; j <= order; ++j) table.raw[static_cast<std::size_t>(j)] += pi * m[static_cast<std::size_t>(j)];
  }
  return table;
}

std::string format_params(const MixtureParams& params) {
  std::ostringstream out;
  out << "K = " << params.size() << "\n";
  out << "pi = " << join(params.weights) << "\n";
  out << "mu = " << join(params.means) << "\n";
  out << "sigma = " << join(params.sigmas) << "\n";
  return out.str();
}

MixtureParams parse_params(const std::string& text) {
  const auto kv = KeyValueText::parse(text, "<mixture>");
  const auto k = kv.get_u64("K");
  MixtureParams p{kv.get_doubles("pi"), kv.get_doubles("mu"), kv.get_doubles("sigma")};
  if (p.weights.size() != k) kv.field_error("pi", "expected " + std::to_string(k) + " values");
  if (p.means.size() != k) kv.field_error("mu", "expected " + std::to_string(k) + " values");
  if (p.sigmas.size() != k) kv.field_error("sigma", "expected " + std::to_string(k) + " values");
  p.validate();
  return p;
}

std::string format_dataset(const Dataset& data) {
  std::string out;
  for (double x : data.points) {
    out += format_double(x);
    out += '\n';
  }
  return out;
}

Dataset parse_dataset(const std::string& text) {
  Dataset data;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    double x = 0.0;
    const char* begin = line.data() + first;
    const char* end = line.data() + last + 1;
    const auto [ptr, ec] = std::from_chars(begin, end, x);
    if (ec != std::errc() || ptr != end) {
      fail(ErrorCode::argument, "dataset line " + std::to_string(number) + " is not a number");
    }
    data.points.push_back(x);
  }
  data.validate();
  return data;
}

}  // namespace relrep
