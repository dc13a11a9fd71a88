#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace relrep {

enum class Activation { tanh, relu, identity };

std::string to_string(Activation a);
Activation parse_activation(const std::string& text);
double activate(Activation a, double x) noexcept;

/// H -> psi(H W + b).  W is (inputs x units); column i of W together with
/// b_i is the incoming weight vector V_i of unit i.
struct Layer {
  Eigen::MatrixXd weights;
  Eigen::RowVectorXd bias;
  Activation activation = Activation::tanh;
};

struct MLPParams {
  std::vector<Layer> layers;

  std::size_t depth() const noexcept { return layers.size(); }
  /// Shapes chain, biases match, last layer is linear.
  void validate() const;
};

/// X is (samples x inputs).
Eigen::MatrixXd forward(const MLPParams& mlp, const Eigen::MatrixXd& inputs);

struct NNEliminationHit {
  std::size_t layer;
  std::size_t unit;
  /// ||w_i|| ||V_i||
  double magnitude;
};

struct NNOverlapHit {
  std::size_t layer;
  std::size_t i;
  std::size_t j;
  /// +1 for V_i = V_j, -1 for V_i = -V_j.
  int sign;
  double gap;
};

struct NNLinearDependenceHit {
  std::size_t layer;
  /// V_k against span{V_i, V_j}.
  std::size_t i;
  std::size_t j;
  std::size_t k;
  double residual;
};

struct NNSingularityReport {
  std::vector<NNEliminationHit> elimination;
  std::vector<NNOverlapHit> overlap;
  std::vector<NNLinearDependenceHit> linear_dependence;

  bool empty() const noexcept {
    return elimination.empty() && overlap.empty() && linear_dependence.empty();
  }
  /// One line per hit.
  std::string to_text() const;
  /// kind,layer,i,j,k,sign,value
  std::string to_csv() const;
};

struct DetectOptions {
  double tol = 1e-6;
  /// Scale tol by the Frobenius norm of the layer (elimination: by the
  /// product of the incoming and outgoing layer norms).
  bool relative_to_layer_norm = true;
};

/// Scans hidden layers (all but the last).  Linear dependence is only
/// checked on identity-activation layers.
NNSingularityReport detect_singularities(const MLPParams& mlp, DetectOptions options = {});

/// Units stored as rows, sorted by one column; the first row is absolute,
/// later rows encode their ordering entry as previous + d^2 + lambda.
struct RowReparam {
  /// Sorted rows; the ordering column holds the reference value in row 0
  /// and d_{i-1} in row i.
  Eigen::MatrixXd encoded;
  double lambda = 0.0;
  Eigen::Index column = 0;
  /// permutation[r] is the original index of sorted row r.
  std::vector<Eigen::Index> permutation;

  /// Sorted matrix with ordering entries rebuilt.
  Eigen::MatrixXd decode() const;
  /// Decoded rows put back in their original positions.
  Eigen::MatrixXd decode_original_order() const;
};

RowReparam reparameterize_rows(const Eigen::MatrixXd& rows, double lambda, Eigen::Index column = 0);

/// Reorders hidden units of `layer` as the sort of reparameterize_rows
/// would, compensating the next layer so the network function is unchanged.
MLPParams permute_hidden_units(const MLPParams& mlp, std::size_t layer,
                               const std::vector<Eigen::Index>& permutation);

/// Rebuilds `layer` from its row reparameterization (units = columns of W,
/// bias appended as a final row entry) and compensates the next layer.
MLPParams apply_row_reparam(const MLPParams& mlp, std::size_t layer, const RowReparam& rep);

/// Incoming vectors of `layer` as rows: [W^T | b^T].
Eigen::MatrixXd unit_rows(const Layer& layer);

/// Gradient descent on a 1-input, 2-hidden-tanh-unit, 1-output regression
/// with the hidden layer's input weights kept in relative form (squared
/// gaps plus lambda).  Returns the mean-squared loss after each step
/// (entry 0 is the initial loss).
std::vector<double> toy_regression_demo(std::uint64_t seed, std::size_t steps, double eta,
                                        double lambda);

}  // namespace relrep
