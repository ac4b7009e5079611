#include "vibroloc/readout.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <string>

#include "vibroloc/errors.hpp"

namespace vibroloc {

void ReadoutModel::validate() const {
  if (weights.rows() < 2 || weights.cols() != 2)
    throw DataError("readout weights must be (D+1)x2 with D >= 1");
  if (!weights.allFinite()) throw DataError("readout weights non-finite");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (input_dim != static_cast<int>(weights.rows()) - 1)
    throw DataError("readout input_dim inconsistent with weights");
}

TrainingSet assemble_training(const Eigen::MatrixXd& features,
                              const Eigen::MatrixXd& positions) {
  if (features.rows() != positions.rows())
    throw DataError("feature/position row count mismatch");
  if (positions.cols() != 2) throw DataError("positions must have 2 columns");
  if (features.rows() < 1) throw DataError("empty training set");
  if (!features.allFinite() || !positions.allFinite())
    throw DataError("non-finite training data");

  TrainingSet ts;
  ts.design.resize(features.rows(), features.cols() + 1);
  ts.design.leftCols(features.cols()) = features;
  ts.design.col(features.cols()).setOnes();
  ts.positions = positions;
  return ts;
}

double default_ridge_epsilon(const Eigen::MatrixXd& design) {
  if (design.size() == 0) throw DataError("empty design matrix");
  // trace(Z^T Z) is the squared Frobenius norm; no need to form the Gram
  // matrix just to read its diagonal.
  const double trace = design.squaredNorm();
  const double eps = 1e-6 * trace / static_cast<double>(design.cols());
  return eps > 0.0 ? eps : 1e-12;
}

ReadoutModel train_ridge(const TrainingSet& ts, double epsilon,
                         bool penalize_bias) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  const Eigen::Index p = ts.design.cols();
  if (ts.positions.rows() != ts.design.rows())
    throw DataError("training set rows inconsistent");

  Eigen::MatrixXd gram = ts.design.transpose() * ts.design;
  Eigen::MatrixXd reg = Eigen::MatrixXd::Identity(p, p) * epsilon;
  if (!penalize_bias) reg(p - 1, p - 1) = 0.0;
  gram += reg;

  const Eigen::MatrixXd rhs = ts.design.transpose() * ts.positions;

  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success)
    throw NumericError("ridge normal equations not positive definite");
  Eigen::MatrixXd weights = llt.solve(rhs);

  const double scale =
      gram.cwiseAbs().maxCoeff() * weights.cwiseAbs().maxCoeff() +
      rhs.cwiseAbs().maxCoeff();
  const double residual = (gram * weights - rhs).cwiseAbs().maxCoeff();
  if (!(residual <= 1e-8 * scale) || !weights.allFinite())
    throw NumericError("ridge solve residual " + std::to_string(residual) +
                       " exceeds tolerance");

  ReadoutModel model;
  model.weights = std::move(weights);
  model.epsilon = epsilon;
  model.input_dim = static_cast<int>(p) - 1;
  return model;
}

Eigen::Vector2d predict(const ReadoutModel& model, const Eigen::VectorXd& z) {
  if (z.size() != model.input_dim)
    throw DataError("feature length " + std::to_string(z.size()) +
                    " does not match readout dimension " +
                    std::to_string(model.input_dim));
  Eigen::VectorXd augmented(z.size() + 1);
  augmented.head(z.size()) = z;
  augmented[z.size()] = 1.0;
  return (augmented.transpose() * model.weights).transpose();
}

}  // namespace vibroloc
