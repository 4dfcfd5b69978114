#include "grounded/cate.hpp"

#include <algorithm>

#include "grounded/grounding.hpp"

namespace grounded {

GridCateModel::GridCateModel(std::vector<double> grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (grid_.size() != values_.size() || grid_.size() < 2)
    throw ConfigError("GridCateModel: need >= 2 grid points with matching values");
  if (!std::is_sorted(grid_.begin(), grid_.end()))
    throw ConfigError("GridCateModel: grid must be ascending");
}

Eigen::VectorXd GridCateModel::predict_effect(const Eigen::MatrixXd& X) const {
  if (X.cols() != 1) throw ConfigError("GridCateModel expects a single covariate");
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double x = X(i, 0);
    if (x <= grid_.front()) {
      out[i] = values_.front();
    } else if (x >= grid_.back()) {
      out[i] = values_.back();
    } else {
      const auto it = std::upper_bound(grid_.begin(), grid_.end(), x);
      const std::size_t hi = static_cast<std::size_t>(it - grid_.begin());
      const double t = (x - grid_[hi - 1]) / (grid_[hi] - grid_[hi - 1]);
      out[i] = values_[hi - 1] + t * (values_[hi] - values_[hi - 1]);
    }
  }
  return out;
}

namespace {

std::vector<Eigen::Index> arm_rows(const Dataset& ds, double arm) {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < ds.n(); ++i)
    if (ds.treatment[i] == arm) rows.push_back(i);
  return rows;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& X, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
  return out;
}

Eigen::VectorXd take(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[rows[i]];
  return out;
}

}  // namespace

std::unique_ptr<CateModel> fit_cate(const Dataset& ds, const CateEstimatorSpec& spec,
                                    std::uint64_t seed) {
  ds.validate();
  switch (spec.kind) {
    case CateKind::difference_of_regressions: {
      const std::vector<Eigen::Index> treated = arm_rows(ds, 1.0);
      const std::vector<Eigen::Index> control = arm_rows(ds, 0.0);
      if (treated.empty() || control.empty())
        throw DataError("fit_cate: empty treatment arm (treated=" +
                        std::to_string(treated.size()) + ", control=" +
                        std::to_string(control.size()) + ")");
      auto f1 = fit_regressor(spec.base, take_rows(ds.features, treated),
                              take(ds.outcome, treated), mix_seed(seed, 1));
      auto f0 = fit_regressor(spec.base, take_rows(ds.features, control),
                              take(ds.outcome, control), mix_seed(seed, 0));
      return std::make_unique<DiffRegressionModel>(std::move(f1), std::move(f0), ds.d());
    }
    case CateKind::pseudo_outcome_regression: {
      const Eigen::VectorXd z =
          pseudo_outcomes(ds, spec.overlap_margin, spec.allow_constant_propensity);
      auto f = fit_regressor(spec.base, ds.features, z, mix_seed(seed, 2));
      return std::make_unique<DirectRegressionModel>(std::move(f), ds.d());
    }
  }
  throw ConfigError("fit_cate: unknown estimator kind");
}

}  // namespace grounded
