#include "vibroloc/subspace.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "vibroloc/errors.hpp"

namespace vibroloc {

namespace {
// Eigenvector sign is arbitrary; fix each column so its largest-magnitude
// entry is positive, making projections platform-deterministic.
void fix_signs(Eigen::MatrixXd& directions) {
  for (Eigen::Index j = 0; j < directions.cols(); ++j) {
    Eigen::Index imax = 0;
    directions.col(j).cwiseAbs().maxCoeff(&imax);
    if (directions(imax, j) < 0.0) directions.col(j) = -directions.col(j);
  }
}
}  // namespace

PcaModel fit_pca(const Eigen::MatrixXd& states, bool centering) {
  const Eigen::Index n = states.rows();
  const Eigen::Index d = states.cols();
  if (n < 2) throw DataError("fit_pca: need at least 2 states");
  if (!states.allFinite()) throw DataError("fit_pca: non-finite entries");

  PcaModel model;
  model.centering = centering;
  model.input_dim = static_cast<int>(d);

  Eigen::MatrixXd centered;
  const Eigen::MatrixXd* data = &states;
  if (centering) {
    model.mean = states.colwise().mean();
    centered = states.rowwise() - model.mean.transpose();
    data = &centered;
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(*data,
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  model.directions = svd.matrixV();
  fix_signs(model.directions);

  const Eigen::VectorXd sigma = svd.singularValues();
  model.eigenvalues.resize(sigma.size());
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    double lambda = sigma[i] * sigma[i] / static_cast<double>(n - 1);
    if (lambda < 0.0 && lambda >= -1e-12) lambda = 0.0;
    model.eigenvalues[i] = lambda;
  }
  return model;
}

Eigen::VectorXd project(const PcaModel& model, const Eigen::VectorXd& state,
                        int D) {
  if (D < 1 || D > model.rank_available())
    throw ConfigError("projection dimension " + std::to_string(D) +
                      " out of range 1.." +
                      std::to_string(model.rank_available()));
  if (state.size() != model.input_dim)
    throw DataError("state length " + std::to_string(state.size()) +
                    " does not match model dimension " +
                    std::to_string(model.input_dim));
  if (model.centering)
    return model.directions.leftCols(D).transpose() * (state - model.mean);
  return model.directions.leftCols(D).transpose() * state;
}

Eigen::MatrixXd project_rows(const PcaModel& model,
                             const Eigen::MatrixXd& states, int D) {
  if (D < 1 || D > model.rank_available())
    throw ConfigError("projection dimension " + std::to_string(D) +
                      " out of range 1.." +
                      std::to_string(model.rank_available()));
  if (states.cols() != model.input_dim)
    throw DataError("state width does not match model dimension");
  if (model.centering)
    return (states.rowwise() - model.mean.transpose()) *
           model.directions.leftCols(D);
  return states * model.directions.leftCols(D);
}

double variance_retained(const PcaModel& model, int D) {
  if (D < 1 || D > model.rank_available())
    throw ConfigError("eta: D out of range");
  const double total = model.eigenvalues.sum();
  if (!(total > 0.0)) throw NumericError("zero variance spectrum");
  return model.eigenvalues.head(D).sum() / total;
}

int choose_dimension(const PcaModel& model, double eta_target) {
  if (!(eta_target > 0.0 && eta_target <= 1.0))
    throw ConfigError("eta target must lie in (0,1]");
  const double total = model.eigenvalues.sum();
  if (!(total > 0.0)) throw NumericError("zero variance spectrum");
  double cum = 0.0;
  for (int D = 1; D <= model.rank_available(); ++D) {
    cum += model.eigenvalues[D - 1];
    if (cum / total >= eta_target) return D;
  }
  return model.rank_available();
}

}  // namespace vibroloc
