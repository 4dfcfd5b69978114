#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <memory>

#include "grounded/dataset.hpp"
#include "grounded/learners.hpp"

namespace grounded {

// A fitted conditional-effect predictor: covariates in, effect estimate out.
class CateModel {
 public:
  virtual ~CateModel() = default;
  virtual Eigen::VectorXd predict_effect(const Eigen::MatrixXd& X) const = 0;
  virtual Eigen::Index input_dim() const = 0;
};

enum class CateKind {
  difference_of_regressions,  // fit per arm, predict f1 - f0
  pseudo_outcome_regression,  // regress q*Y on X directly
};

struct CateEstimatorSpec {
  CateKind kind = CateKind::difference_of_regressions;
  RegressorSpec base;
  // When the dataset lacks a propensity column, pseudo-outcome methods fall
  // back to e := mean(T) (with a warning) if this is set; error otherwise.
  bool allow_constant_propensity = true;
  double overlap_margin = 0.01;
};

class DiffRegressionModel : public CateModel {
 public:
  DiffRegressionModel(std::unique_ptr<Regressor> treated, std::unique_ptr<Regressor> control,
                      Eigen::Index dim)
      : treated_(std::move(treated)), control_(std::move(control)), dim_(dim) {}
  Eigen::VectorXd predict_effect(const Eigen::MatrixXd& X) const override {
    return treated_->predict(X) - control_->predict(X);
  }
  Eigen::Index input_dim() const override { return dim_; }
  const Regressor& treated() const { return *treated_; }
  const Regressor& control() const { return *control_; }

 private:
  std::unique_ptr<Regressor> treated_, control_;
  Eigen::Index dim_;
};

class DirectRegressionModel : public CateModel {
 public:
  DirectRegressionModel(std::unique_ptr<Regressor> fit, Eigen::Index dim)
      : fit_(std::move(fit)), dim_(dim) {}
  Eigen::VectorXd predict_effect(const Eigen::MatrixXd& X) const override {
    return fit_->predict(X);
  }
  Eigen::Index input_dim() const override { return dim_; }
  const Regressor& regressor() const { return *fit_; }

 private:
  std::unique_ptr<Regressor> fit_;
  Eigen::Index dim_;
};

// Wraps a plain function; used for oracle models in tests and sweeps.
class FunctionCateModel : public CateModel {
 public:
  FunctionCateModel(std::function<double(const Eigen::RowVectorXd&)> fn, Eigen::Index dim)
      : fn_(std::move(fn)), dim_(dim) {}
  Eigen::VectorXd predict_effect(const Eigen::MatrixXd& X) const override {
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = fn_(X.row(i));
    return out;
  }
  Eigen::Index input_dim() const override { return dim_; }

 private:
  std::function<double(const Eigen::RowVectorXd&)> fn_;
  Eigen::Index dim_;
};

// Piecewise-linear interpolation of (grid, values) over a single covariate,
// clamped at the ends. Carries Monte-Carlo oracle curves into model form.
class GridCateModel : public CateModel {
 public:
  GridCateModel(std::vector<double> grid, std::vector<double> values);
  Eigen::VectorXd predict_effect(const Eigen::MatrixXd& X) const override;
  Eigen::Index input_dim() const override { return 1; }
  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> grid_, values_;
};

std::unique_ptr<CateModel> fit_cate(const Dataset& ds, const CateEstimatorSpec& spec,
                                    std::uint64_t seed);

}  // namespace grounded
