#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <vector>

#include "grounded/common.hpp"

namespace grounded {

struct LinearModel {
  Eigen::VectorXd coefficients;
  double intercept = 0.0;
  double lambda_used = 0.0;
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;
};

// Minimizes ||y - X b - intercept||^2 + lambda ||b||^2 with an unpenalized
// intercept, via a QR factorization of the centered, lambda-augmented design.
// At lambda = 0 a singular design (condition number above the threshold) is a
// hard error.
LinearModel ridge_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda);

// 9 log-spaced values from 1e-4 to 1e4.
std::vector<double> default_lambda_grid();

// k-fold CV over the lambda grid; picks the smallest lambda among ties,
// then refits on all rows. Fold assignment is a seeded shuffle.
LinearModel ridge_cv_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         std::vector<double> lambdas = default_lambda_grid(), int k = 5,
                         std::uint64_t seed = 0);

struct ForestParams {
  int n_trees = 200;
  int min_leaf = 5;
  int max_depth = 0;   // 0 = unbounded
  int mtry = 0;        // features tried per split; 0 = ceil(d/3)
  bool bootstrap = true;
  int threads = 1;     // 0 = all cores; the fitted forest is identical either way
};

// Flat node array; feature < 0 marks a leaf carrying the mean of its
// in-node training targets.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;
  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

struct ForestModel {
  std::vector<RegressionTree> trees;
  ForestParams params;
  Eigen::Index input_dim = 0;
  // Average of per-tree predictions; always within [min(y), max(y)].
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;
};

// CART regression forest: exhaustive variance-reduction split search over
// midpoints of sorted unique values, ties broken by (feature, threshold)
// order. Tree t uses the RNG stream mix_seed(seed, t), so the result does not
// depend on thread count or execution order.
ForestModel forest_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const ForestParams& params, std::uint64_t seed);

// Polymorphic facade over the two base learners used throughout.
class Regressor {
 public:
  virtual ~Regressor() = default;
  virtual Eigen::VectorXd predict(const Eigen::MatrixXd& X) const = 0;
};

enum class BaseLearner { ridge_cv, forest };

struct RegressorSpec {
  BaseLearner kind = BaseLearner::forest;
  ForestParams forest;
  std::vector<double> lambdas = default_lambda_grid();
  int cv_folds = 5;
};

class RidgeRegressor : public Regressor {
 public:
  explicit RidgeRegressor(LinearModel m) : model(std::move(m)) {}
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override { return model.predict(X); }
  LinearModel model;
};

class ForestRegressor : public Regressor {
 public:
  explicit ForestRegressor(ForestModel m) : model(std::move(m)) {}
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override { return model.predict(X); }
  ForestModel model;
};

std::unique_ptr<Regressor> fit_regressor(const RegressorSpec& spec, const Eigen::MatrixXd& X,
                                         const Eigen::VectorXd& y, std::uint64_t seed);

}  // namespace grounded
