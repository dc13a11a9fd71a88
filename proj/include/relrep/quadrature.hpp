#pragma once

#include <cstddef>
#include <vector>

#include "relrep/gmm.hpp"

namespace relrep {

struct QuadratureNode {
  double x;
  double weight;
};

inline constexpr std::size_t kDefaultQuadratureNodes = 201;
inline constexpr double kQuadratureHalfWidth = 10.0;

/// Nodes and weights for expectations under a mixture: per component, a
/// composite trapezoid grid of `nodes_per_component` points on
/// mu_k +- 10 sigma_k, weighted by pi_k N(x | mu_k, sigma_k).  Summing
/// weight * f(x) approximates E[f(x)].
std::vector<QuadratureNode> mixture_quadrature(const MixtureParams& params,
                                               std::size_t nodes_per_component =
                                                   kDefaultQuadratureNodes);

}  // namespace relrep
