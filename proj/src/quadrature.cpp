#include "relrep/quadrature.hpp"

#include <cmath>

#include "relrep/error.hpp"

namespace relrep {

std::vector<QuadratureNode> mixture_quadrature(const MixtureParams& params,
                                               std::size_t nodes_per_component) {
  if (nodes_per_component < 3) fail(ErrorCode::argument, "quadrature needs at least 3 nodes");
  params.validate();
  std::vector<QuadratureNode> nodes;
  nodes.reserve(params.size() * nodes_per_component);
  const double intervals = static_cast<double>(nodes_per_component - 1);
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params.weights[k] == 0.0) continue;
    const double mu = params.means[k];
    const double sigma = params.sigmas[k];
    const double lo = mu - kQuadratureHalfWidth * sigma;
    const double h = 2.0 * kQuadratureHalfWidth * sigma / intervals;
    for (std::size_t i = 0; i < nodes_per_component; ++i) {
      const double x = lo + h * static_cast<double>(i);
      const double end_factor = (i == 0 || i + 1 == nodes_per_component) ? 0.5 : 1.0;
      nodes.push_back({x, params.weights[k] * std::exp(log_normal_pdf(x, mu, sigma)) * h *
                              end_factor});
    }
  }
  return nodes;
}

}  // namespace relrep
