#include "relrep/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "relrep/error.hpp"
#include "relrep/gmm.hpp"
#include "relrep/rng.hpp"

namespace relrep {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::identity: return "identity";
  }
  return "?";
}

Activation parse_activation(const std::string& text) {
  if (text == "tanh") return Activation::tanh;
  if (text == "relu") return Activation::relu;
  if (text == "identity" || text == "linear") return Activation::identity;
  fail(ErrorCode::argument, "unknown activation `" + text + "` (tanh | relu | identity)");
}

double activate(Activation a, double x) noexcept {
  switch (a) {
    case Activation::tanh: return std::tanh(x);
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::identity: return x;
  }
  return x;
}

void MLPParams::validate() const {
  if (layers.empty()) fail(ErrorCode::argument, "network needs at least one layer");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& layer = layers[l];
    if (layer.bias.size() != layer.weights.cols()) {
      fail(ErrorCode::argument, "layer " + std::to_string(l) + ": bias length differs from unit count");
    }
    if (l > 0 && layer.weights.rows() != layers[l - 1].weights.cols()) {
      fail(ErrorCode::argument, "layer " + std::to_string(l) + ": input width does not match previous layer");
    }
    if (!layer.weights.allFinite() || !layer.bias.allFinite()) {
      fail(ErrorCode::argument, "layer " + std::to_string(l) + ": non-finite parameter");
    }
  }
  if (layers.back().activation != Activation::identity) {
    fail(ErrorCode::argument, "the last layer must be linear");
  }
}

Eigen::MatrixXd forward(const MLPParams& mlp, const Eigen::MatrixXd& inputs) {
  mlp.validate();
  if (inputs.cols() != mlp.layers.front().weights.rows()) {
    fail(ErrorCode::argument, "input width " + std::to_string(inputs.cols()) + " does not match layer 0 (" +
                                  std::to_string(mlp.layers.front().weights.rows()) + ")");
  }
  Eigen::MatrixXd h = inputs;
  for (const Layer& layer : mlp.layers) {
    Eigen::MatrixXd z = h * layer.weights;
    z.rowwise() += layer.bias;
    if (layer.activation != Activation::identity) {
      z = z.unaryExpr([a = layer.activation](double v) { return activate(a, v); });
    }
    h = std::move(z);
  }
  return h;
}

Eigen::MatrixXd unit_rows(const Layer& layer) {
  Eigen::MatrixXd rows(layer.weights.cols(), layer.weights.rows() + 1);
  rows.leftCols(layer.weights.rows()) = layer.weights.transpose();
  rows.col(layer.weights.rows()) = layer.bias.transpose();
  return rows;
}

namespace {

// Residual of v against span{a, b}.  A rank-revealing solve keeps collinear
// a, b from blowing up.
double span_residual(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& v) {
  Eigen::MatrixXd basis(a.size(), 2);
  basis << a, b;
  const Eigen::VectorXd coef = basis.completeOrthogonalDecomposition().solve(v);
  return (basis * coef - v).norm();
}

}  // namespace

NNSingularityReport detect_singularities(const MLPParams& mlp, DetectOptions options) {
  if (!(options.tol > 0.0)) fail(ErrorCode::argument, "detection tolerance must be > 0");
  mlp.validate();
  NNSingularityReport report;
  for (std::size_t l = 0; l + 1 < mlp.depth(); ++l) {
    const Layer& layer = mlp.layers[l];
    const Eigen::MatrixXd rows = unit_rows(layer);
    const Eigen::MatrixXd& outgoing = mlp.layers[l + 1].weights;
    const auto units = static_cast<std::size_t>(rows.rows());
    const double in_norm = rows.norm();
    const double scale = options.relative_to_layer_norm ? in_norm : 1.0;
    const double product_scale = options.relative_to_layer_norm ? in_norm * outgoing.norm() : 1.0;

    for (std::size_t i = 0; i < units; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double magnitude = outgoing.row(ii).norm() * rows.row(ii).norm();
      if (magnitude <= options.tol * product_scale) report.elimination.push_back({l, i, magnitude});
    }
    for (std::size_t i = 0; i < units; ++i) {
      for (std::size_t j = i + 1; j < units; ++j) {
        const auto vi = rows.row(static_cast<Eigen::Index>(i));
        const auto vj = rows.row(static_cast<Eigen::Index>(j));
        const double same = (vi - vj).norm();
        const double flipped = (vi + vj).norm();
        const double gap = std::min(same, flipped);
        if (gap <= options.tol * scale) report.overlap.push_back({l, i, j, same <= flipped ? 1 : -1, gap});
      }
    }
    if (layer.activation != Activation::identity) continue;
    // One entry per unordered triple, naming the member that is best
    // explained by the other two.
    for (std::size_t a = 0; a < units; ++a) {
      for (std::size_t b = a + 1; b < units; ++b) {
        for (std::size_t c = b + 1; c < units; ++c) {
          const std::size_t triple[3] = {a, b, c};
          NNLinearDependenceHit best{l, 0, 0, 0, INFINITY};
          for (int pick = 2; pick >= 0; --pick) {
            const std::size_t k = triple[pick];
            const std::size_t i = triple[pick == 0 ? 1 : 0];
            const std::size_t j = triple[pick == 2 ? 1 : 2];
            const double residual = span_residual(rows.row(static_cast<Eigen::Index>(i)).transpose(),
                                                  rows.row(static_cast<Eigen::Index>(j)).transpose(),
                                                  rows.row(static_cast<Eigen::Index>(k)).transpose());
            if (residual < best.residual) best = {l, i, j, k, residual};
          }
          if (best.residual <= options.tol * scale) report.linear_dependence.push_back(best);
        }
      }
    }
  }
  return report;
}

std::string NNSingularityReport::to_text() const {
  std::ostringstream out;
  for (const auto& h : elimination) {
    out << "elimination layer=" << h.layer << " unit=" << h.unit << " magnitude=" << format_double(h.magnitude)
        << "\n";
  }
  for (const auto& h : overlap) {
    out << "overlap layer=" << h.layer << " units=" << h.i << "," << h.j << " sign=" << (h.sign > 0 ? "+" : "-")
        << " gap=" << format_double(h.gap) << "\n";
  }
  for (const auto& h : linear_dependence) {
    out << "linear_dependence layer=" << h.layer << " unit=" << h.k << " span=" << h.i << "," << h.j
        << " residual=" << format_double(h.residual) << "\n";
  }
  if (empty()) out << "no singularities detected\n";
  return out.str();
}

std::string NNSingularityReport::to_csv() const {
  std::ostringstream out;
  out << "# schema=1 kind=nn_singularities\n";
  out << "kind,layer,i,j,k,sign,value\n";
  for (const auto& h : elimination) {
    out << "elimination," << h.layer << "," << h.unit << ",,,," << format_double(h.magnitude) << "\n";
  }
  for (const auto& h : overlap) {
    out << "overlap," << h.layer << "," << h.i << "," << h.j << ",," << h.sign << "," << format_double(h.gap)
        << "\n";
  }
  for (const auto& h : linear_dependence) {
    out << "linear_dependence," << h.layer << "," << h.i << "," << h.j << "," << h.k << ",,"
        << format_double(h.residual) << "\n";
  }
  return out.str();
}

RowReparam reparameterize_rows(const Eigen::MatrixXd& rows, double lambda, Eigen::Index column) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail(ErrorCode::argument, "lambda must be finite and >= 0");
  if (rows.rows() == 0 || column < 0 || column >= rows.cols()) {
    fail(ErrorCode::argument, "ordering column out of range");
  }
  RowReparam rep;
  rep.lambda = lambda;
  rep.column = column;
  rep.permutation.resize(static_cast<std::size_t>(rows.rows()));
  std::iota(rep.permutation.begin(), rep.permutation.end(), Eigen::Index{0});
  std::stable_sort(rep.permutation.begin(), rep.permutation.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return rows(a, column) < rows(b, column); });
  rep.encoded.resize(rows.rows(), rows.cols());
  for (Eigen::Index r = 0; r < rows.rows(); ++r) rep.encoded.row(r) = rows.row(rep.permutation[r]);
  for (Eigen::Index r = rows.rows() - 1; r >= 1; --r) {
    const double gap = rows(rep.permutation[r], column) - rows(rep.permutation[r - 1], column);
    if (lambda > 0.0 && gap == 0.0) {
      fail(ErrorCode::not_identifiable, "rows " + std::to_string(rep.permutation[r - 1]) + " and " +
                                            std::to_string(rep.permutation[r]) +
                                            " tie on the ordering column; the point is singular");
    }
    if (gap < lambda) {
      fail(ErrorCode::not_identifiable, "gap " + format_double(gap) + " below clearance " + format_double(lambda));
    }
    rep.encoded(r, column) = std::sqrt(gap - lambda);
  }
  return rep;
}

Eigen::MatrixXd RowReparam::decode() const {
  Eigen::MatrixXd out = encoded;
  for (Eigen::Index r = 1; r < out.rows(); ++r) {
    const double d = encoded(r, column);
    out(r, column) = out(r - 1, column) + d * d + lambda;
  }
  return out;
}

Eigen::MatrixXd RowReparam::decode_original_order() const {
  const Eigen::MatrixXd sorted = decode();
  Eigen::MatrixXd out(sorted.rows(), sorted.cols());
  for (Eigen::Index r = 0; r < sorted.rows(); ++r) out.row(permutation[static_cast<std::size_t>(r)]) = sorted.row(r);
  return out;
}

namespace {

void check_hidden(const MLPParams& mlp, std::size_t layer, Eigen::Index units) {
  mlp.validate();
  if (layer + 1 >= mlp.depth()) fail(ErrorCode::argument, "only hidden layers can be reparameterized");
  if (units != mlp.layers[layer].weights.cols()) {
    fail(ErrorCode::argument, "permutation length does not match the unit count");
  }
}

}  // namespace

MLPParams permute_hidden_units(const MLPParams& mlp, std::size_t layer,
                               const std::vector<Eigen::Index>& permutation) {
  check_hidden(mlp, layer, static_cast<Eigen::Index>(permutation.size()));
  MLPParams out = mlp;
  const Layer& src = mlp.layers[layer];
  const Layer& next = mlp.layers[layer + 1];
  for (std::size_t r = 0; r < permutation.size(); ++r) {
    const Eigen::Index from = permutation[r];
    const auto to = static_cast<Eigen::Index>(r);
    if (from < 0 || from >= src.weights.cols()) fail(ErrorCode::argument, "permutation index out of range");
    out.layers[layer].weights.col(to) = src.weights.col(from);
    out.layers[layer].bias(to) = src.bias(from);
    out.layers[layer + 1].weights.row(to) = next.weights.row(from);
  }
  return out;
}

MLPParams apply_row_reparam(const MLPParams& mlp, std::size_t layer, const RowReparam& rep) {
  check_hidden(mlp, layer, rep.encoded.rows());
  const Eigen::Index inputs = mlp.layers[layer].weights.rows();
  if (rep.encoded.cols() != inputs + 1) fail(ErrorCode::argument, "row width must be inputs + 1 (bias last)");
  MLPParams out = permute_hidden_units(mlp, layer, rep.permutation);
  const Eigen::MatrixXd rows = rep.decode();
  out.layers[layer].weights = rows.leftCols(inputs).transpose();
  out.layers[layer].bias = rows.col(inputs).transpose();
  return out;
}

std::vector<double> toy_regression_demo(std::uint64_t seed, std::size_t steps, double eta, double lambda) {
  if (!(eta > 0.0) || !(lambda >= 0.0)) fail(ErrorCode::argument, "demo needs eta > 0 and lambda >= 0");
  Rng rng(seed);
  constexpr int n = 64;
  Eigen::ArrayXd x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x[i] = -2.0 + 4.0 * rng.uniform();
    y[i] = std::tanh(2.0 * x[i] - 1.0) - 0.5 * std::tanh(-1.0 * x[i] + 0.5) + 0.05 * rng.normal();
  }
  // Hidden input weights: w1 = a, w2 = a + d^2 + lambda.
  double a = 0.3 * rng.normal();
  double d = 0.5 + 0.2 * std::abs(rng.normal());
  double b1 = 0.1 * rng.normal(), b2 = 0.1 * rng.normal();
  double c1 = 0.5 * rng.normal(), c2 = 0.5 * rng.normal(), c0 = 0.0;

  std::vector<double> history;
  history.reserve(steps + 1);
  for (std::size_t step = 0; step <= steps; ++step) {
    const double w1 = a, w2 = a + d * d + lambda;
    const Eigen::ArrayXd h1 = (w1 * x + b1).tanh();
    const Eigen::ArrayXd h2 = (w2 * x + b2).tanh();
    const Eigen::ArrayXd resid = c1 * h1 + c2 * h2 + c0 - y;
    history.push_back(resid.square().mean());
    if (step == steps) break;
    const Eigen::ArrayXd g = 2.0 * resid / n;
    const Eigen::ArrayXd z1 = g * c1 * (1.0 - h1.square());
    const Eigen::ArrayXd z2 = g * c2 * (1.0 - h2.square());
    const double gw1 = (z1 * x).sum(), gw2 = (z2 * x).sum();
    a -= eta * (gw1 + gw2);
    d -= eta * 2.0 * d * gw2;
    b1 -= eta * z1.sum();
    b2 -= eta * z2.sum();
    c1 -= eta * (g * h1).sum();
    c2 -= eta * (g * h2).sum();
    c0 -= eta * g.sum();
  }
  return history;
}

}  // namespace relrep
