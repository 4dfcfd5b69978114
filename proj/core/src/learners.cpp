#include "grounded/learners.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace grounded {

Eigen::VectorXd LinearModel::predict(const Eigen::MatrixXd& X) const {
  if (X.cols() != coefficients.size())
    throw ConfigError("LinearModel::predict: expected " + std::to_string(coefficients.size()) +
                      " features, got " + std::to_string(X.cols()));
  return (X * coefficients).array() + intercept;
}

LinearModel ridge_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda) {
  if (X.rows() != y.size()) throw ConfigError("ridge_fit: X and y row counts differ");
  if (X.rows() < 1) throw ConfigError("ridge_fit: empty input");
  if (lambda < 0.0) throw ConfigError("ridge_fit: lambda must be nonnegative");

  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  const Eigen::RowVectorXd col_means = X.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd Xc = X.rowwise() - col_means;
  const Eigen::VectorXd yc = y.array() - y_mean;

  if (lambda == 0.0) {
    // Condition check on the intercept-augmented design.
    Eigen::MatrixXd aug(n, d + 1);
    aug.col(0).setOnes();
    aug.rightCols(d) = X;
    const Eigen::BDCSVD<Eigen::MatrixXd> svd(aug);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    const double smax = svd.singularValues()(0);
    if (!(smin > 0.0) || smax / smin > kSingularityThreshold)
      throw DataError("ridge_fit: singular design at lambda = 0 (condition number " +
                      std::to_string(smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity()) +
                      ")");
  }

  // Augmented least squares [Xc; sqrt(lambda) I] b = [yc; 0].
  Eigen::MatrixXd A(n + d, d);
  A.topRows(n) = Xc;
  A.bottomRows(d) = std::sqrt(lambda) * Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + d);
  b.head(n) = yc;

  LinearModel model;
  model.coefficients = A.colPivHouseholderQr().solve(b);
  model.intercept = y_mean - col_means.dot(model.coefficients);
  model.lambda_used = lambda;
  if (!model.coefficients.allFinite() || !std::isfinite(model.intercept))
    throw DataError("ridge_fit: non-finite solution");
  return model;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  for (int i = 0; i < 9; ++i) grid.push_back(std::pow(10.0, -4.0 + i));
  return grid;
}

LinearModel ridge_cv_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         std::vector<double> lambdas, int k, std::uint64_t seed) {
  const Eigen::Index n = X.rows();
  if (k < 2) throw ConfigError("ridge_cv_fit: need at least 2 folds");
  if (n < k) throw ConfigError("ridge_cv_fit: fewer rows (" + std::to_string(n) +
                               ") than folds (" + std::to_string(k) + ")");
  if (lambdas.empty()) throw ConfigError("ridge_cv_fit: empty lambda grid");
  std::sort(lambdas.begin(), lambdas.end());

  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(mix_seed(seed, 0x5fca1d));
  std::shuffle(idx.begin(), idx.end(), rng);

  std::vector<int> fold_of(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    fold_of[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] =
        static_cast<int>(i % k);

  double best_lambda = lambdas.front();
  double best_mse = std::numeric_limits<double>::infinity();
  for (const double lambda : lambdas) {
    double total = 0.0;
    for (int f = 0; f < k; ++f) {
      std::vector<Eigen::Index> train, val;
      for (Eigen::Index i = 0; i < n; ++i)
        (fold_of[static_cast<std::size_t>(i)] == f ? val : train).push_back(i);
      Eigen::MatrixXd Xt(static_cast<Eigen::Index>(train.size()), X.cols());
      Eigen::VectorXd yt(static_cast<Eigen::Index>(train.size()));
      for (std::size_t i = 0; i < train.size(); ++i) {
        Xt.row(static_cast<Eigen::Index>(i)) = X.row(train[i]);
        yt[static_cast<Eigen::Index>(i)] = y[train[i]];
      }
      Eigen::MatrixXd Xv(static_cast<Eigen::Index>(val.size()), X.cols());
      Eigen::VectorXd yv(static_cast<Eigen::Index>(val.size()));
      for (std::size_t i = 0; i < val.size(); ++i) {
        Xv.row(static_cast<Eigen::Index>(i)) = X.row(val[i]);
        yv[static_cast<Eigen::Index>(i)] = y[val[i]];
      }
      const LinearModel m = ridge_fit(Xt, yt, lambda);
      total += (m.predict(Xv) - yv).squaredNorm() / static_cast<double>(yv.size());
    }
    const double mean_mse = total / k;
    if (mean_mse < best_mse) {  // strict: ties keep the smaller lambda
      best_mse = mean_mse;
      best_lambda = lambda;
    }
  }
  return ridge_fit(X, y, best_lambda);
}

std::unique_ptr<Regressor> fit_regressor(const RegressorSpec& spec, const Eigen::MatrixXd& X,
                                         const Eigen::VectorXd& y, std::uint64_t seed) {
  switch (spec.kind) {
    case BaseLearner::ridge_cv:
      return std::make_unique<RidgeRegressor>(
          ridge_cv_fit(X, y, spec.lambdas, spec.cv_folds, seed));
    case BaseLearner::forest:
      return std::make_unique<ForestRegressor>(forest_fit(X, y, spec.forest, seed));
  }
  throw ConfigError("fit_regressor: unknown base learner");
}

}  // namespace grounded
