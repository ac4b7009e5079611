#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "vibroloc/errors.hpp"
#include "vibroloc/readout.hpp"

using namespace vibroloc;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols,
                              std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(gen);
  return m;
}

// Reference solve through an explicit dense inverse, the route the library
// deliberately avoids.
Eigen::MatrixXd brute_ridge(const Eigen::MatrixXd& z, const Eigen::MatrixXd& p,
                            double eps, bool penalize_bias) {
  Eigen::MatrixXd reg =
      eps * Eigen::MatrixXd::Identity(z.cols(), z.cols());
  if (!penalize_bias) reg(z.cols() - 1, z.cols() - 1) = 0.0;
  const Eigen::MatrixXd gram = z.transpose() * z + reg;
  return gram.inverse() * z.transpose() * p;
}

}  // namespace

TEST_CASE("assemble_training appends the bias column") {
  const Eigen::MatrixXd z = random_matrix(6, 3, 1);
  const Eigen::MatrixXd p = random_matrix(6, 2, 2);
  const TrainingSet ts = assemble_training(z, p);

  REQUIRE(ts.design.rows() == 6);
  REQUIRE(ts.design.cols() == 4);
  CHECK(ts.design.leftCols(3) == z);
  CHECK(ts.design.col(3) == Eigen::VectorXd::Ones(6));
  CHECK(ts.positions == p);

  CHECK_THROWS_AS(assemble_training(z, random_matrix(5, 2, 3)), DataError);
}

TEST_CASE("an exactly linear relation is recovered under negligible ridge") {
  Eigen::MatrixXd z(3, 1);
  z << 1, 2, 3;
  Eigen::MatrixXd p(3, 2);
  for (int i = 0; i < 3; ++i) {
    p(i, 0) = 2.0 * z(i, 0) + 1.0;
    p(i, 1) = -z(i, 0) + 0.5;
  }
  const ReadoutModel model = train_ridge(assemble_training(z, p), 1e-12);

  CHECK(model.weights(0, 0) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(model.weights(1, 0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(model.weights(0, 1) == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(model.weights(1, 1) == doctest::Approx(0.5).epsilon(1e-10));

  const Eigen::Vector2d at4 = predict(model, Eigen::VectorXd::Constant(1, 4.0));
  CHECK(at4.x() == doctest::Approx(9.0).epsilon(1e-10));
  CHECK(at4.y() == doctest::Approx(-3.5).epsilon(1e-10));
}

TEST_CASE("closed form matches a brute-force normal-equation inverse") {
  std::mt19937_64 gen(99);
  std::uniform_int_distribution<int> n_dist(5, 40);
  std::uniform_int_distribution<int> d_dist(1, 6);
  std::uniform_real_distribution<double> log_eps(-8.0, 0.0);

  for (int rep = 0; rep < 20; ++rep) {
    const int n = n_dist(gen);
    const int d = d_dist(gen);
    const double eps = std::pow(10.0, log_eps(gen));
    const bool penalize_bias = rep % 2 == 0;

    const TrainingSet ts = assemble_training(
        random_matrix(n, d, 1000 + rep), random_matrix(n, 2, 2000 + rep));
    const ReadoutModel model = train_ridge(ts, eps, penalize_bias);
    const Eigen::MatrixXd ref =
        brute_ridge(ts.design, ts.positions, eps, penalize_bias);

    const double rel = (model.weights - ref).norm() / ref.norm();
    CHECK(rel < 1e-8);
    CHECK(model.epsilon == eps);
    CHECK(model.input_dim == d);
  }
}

TEST_CASE("default ridge scales with the design energy") {
  Eigen::MatrixXd z(2, 2);
  z << 1, 2, 3, 4;
  // trace(Z^T Z) = 30, two columns.
  CHECK(default_ridge_epsilon(z) == doctest::Approx(1.5e-5).epsilon(1e-12));
}

TEST_CASE("free bias absorbs a constant target offset") {
  const Eigen::MatrixXd z = random_matrix(30, 3, 7);
  Eigen::MatrixXd p = random_matrix(30, 2, 8);
  p.array() += 100.0;

  const TrainingSet ts = assemble_training(z, p);
  const ReadoutModel strong = train_ridge(ts, 50.0, true);
  const ReadoutModel free_bias = train_ridge(ts, 50.0, false);

  // With the bias penalized, a huge ridge pulls the offset toward zero;
  // leaving it free keeps the constant term near 100.
  CHECK(std::abs(strong.weights(3, 0)) < 90.0);
  CHECK(free_bias.weights(3, 0) == doctest::Approx(100.0).epsilon(0.05));
}

TEST_CASE("the regularizer must be strictly positive") {
  const TrainingSet ts = assemble_training(random_matrix(6, 2, 4),
                                           random_matrix(6, 2, 5));
  CHECK_THROWS_AS(train_ridge(ts, 0.0), ConfigError);
  CHECK_THROWS_AS(train_ridge(ts, -1e-3), ConfigError);
}

TEST_CASE("an untrustworthy solve raises a numeric error") {
  TrainingSet ts = assemble_training(random_matrix(6, 2, 4),
                                     random_matrix(6, 2, 5));
  ts.design(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(train_ridge(ts, 1e-6), NumericError);
}

TEST_CASE("prediction validates dimensions") {
  const TrainingSet ts = assemble_training(random_matrix(10, 2, 6),
                                           random_matrix(10, 2, 7));
  const ReadoutModel model = train_ridge(ts, 1e-6);
  CHECK_THROWS_AS(predict(model, Eigen::VectorXd::Zero(3)), DataError);

  ReadoutModel broken = model;
  broken.weights(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(broken.validate(), DataError);
}
