#pragma once

#include <Eigen/Dense>

namespace vibroloc {

// Principal directions of a state matrix, computed through a thin SVD of the
// (optionally centered) data rather than the d x d covariance: the spectrum
// is identical via C = V (S^2/(N-1)) V^T and the cost scales with
// min(N, d) << d.
struct PcaModel {
  Eigen::MatrixXd directions;   // d x r_full, orthonormal columns
  Eigen::VectorXd eigenvalues;  // non-increasing, >= 0
  Eigen::VectorXd mean;         // empty unless centering
  bool centering = false;
  int input_dim = 0;            // d

  int rank_available() const { return static_cast<int>(directions.cols()); }
};

// Fits on an N x d matrix of row states. Eigenvalues in [-1e-12, 0) from
// roundoff are clipped to 0; each direction is sign-fixed so its
// largest-magnitude entry is positive. Throws DataError if N < 2 or the data
// contains non-finite entries.
PcaModel fit_pca(const Eigen::MatrixXd& states, bool centering = false);

// z = (r - mean) * V_D, the first D principal coordinates. Throws
// ConfigError if D is out of range, DataError on length mismatch.
Eigen::VectorXd project(const PcaModel& model, const Eigen::VectorXd& state,
                        int D);

// Row-wise projection of an N x d matrix.
Eigen::MatrixXd project_rows(const PcaModel& model,
                             const Eigen::MatrixXd& states, int D);

// eta(D) = sum_{i<=D} lambda_i / sum_i lambda_i. Throws ConfigError when D is
// out of [1, r_full], NumericError on an all-zero spectrum.
double variance_retained(const PcaModel& model, int D);

// Smallest D with eta(D) >= eta_target; falls back to r_full.
int choose_dimension(const PcaModel& model, double eta_target);

}  // namespace vibroloc
