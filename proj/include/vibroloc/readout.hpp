#pragma once

#include <Eigen/Dense>

namespace vibroloc {

// Linear readout z -> (x, y) with an appended bias input.
struct ReadoutModel {
  Eigen::MatrixXd weights;  // (D+1) x 2, last row is the bias row
  double epsilon = 0.0;
  int input_dim = 0;        // D

  void validate() const;  // throws DataError on shape/finite violations
};

struct TrainingSet {
  Eigen::MatrixXd design;     // N x (D+1), last column all ones
  Eigen::MatrixXd positions;  // N x 2
};

// Appends the constant-1 column to N x D projected states.
TrainingSet assemble_training(const Eigen::MatrixXd& projected,
                              const Eigen::MatrixXd& positions);

// W = (Z^T Z + eps I)^{-1} Z^T P via an LLT factorization, never an explicit
// inverse. penalize_bias=false zeroes the ridge term on the bias row. The
// solution is residual-checked against the normal equations; failure to
// factor or a residual above 1e-8 * scale throws NumericError.
ReadoutModel train_ridge(const TrainingSet& ts, double epsilon,
                         bool penalize_bias = true);

// Scale-relative default: 1e-6 * trace(Z^T Z) / (D+1).
double default_ridge_epsilon(const Eigen::MatrixXd& design);

// p_hat = W^T [z; 1]. Throws DataError on dimension mismatch.
Eigen::Vector2d predict(const ReadoutModel& model, const Eigen::VectorXd& z);

}  // namespace vibroloc
