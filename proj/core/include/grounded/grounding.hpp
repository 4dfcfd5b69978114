#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <string>

#include "grounded/cate.hpp"
#include "grounded/dataset.hpp"

namespace grounded {

inline constexpr double kDefaultOverlapMargin = 0.01;

// Feature map phi for the parametric confounding correction eta(x) = theta^T phi(x).
// Every kind represents eta == 0 via theta == 0.
struct EtaFeatureMap {
  enum class Kind {
    identity,                 // phi(x) = x
    identity_plus_intercept,  // phi(x) = (1, x); default, keeps constant shifts representable
    polynomial,               // phi(x) = (1, x_j, x_j^2, ..., x_j^degree) per coordinate
  };
  Kind kind = Kind::identity_plus_intercept;
  int degree = 1;

  Eigen::Index output_dim(Eigen::Index d) const;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;

  // "identity" | "identity+intercept" | "poly:<k>"
  static EtaFeatureMap parse(const std::string& text);
  std::string name() const;
};

// Fitted correction parameters plus the map they apply to.
struct Correction {
  Eigen::VectorXd theta;
  EtaFeatureMap feature_map;
  double design_condition_number = 0.0;
  std::int64_t n_used = 0;

  Eigen::VectorXd eta(const Eigen::MatrixXd& X) const;
};

// The signed re-weighting q: 1/e for treated, -1/(1-e) for control.
// e must lie in [margin, 1 - margin]; violations are hard errors.
double signed_weight(double t, double e, double margin = kDefaultOverlapMargin);

// Elementwise q(T_i, e_i) * Y_i. Uses the propensity column when present;
// otherwise falls back to constant e := mean(T) (warned) when allowed.
Eigen::VectorXd pseudo_outcomes(const Dataset& ds, double margin = kDefaultOverlapMargin,
                                bool allow_constant_propensity = true);

// Least squares of (pseudo-outcome - omega(x)) on phi(x). No regularization:
// an ill-conditioned design is surfaced as IdentifiabilityError instead of
// being silently shrunk.
Correction fit_correction(const Dataset& unc, const CateModel& omega, const EtaFeatureMap& map,
                          double margin = kDefaultOverlapMargin,
                          bool allow_constant_propensity = true);

// predict_effect(x) = omega(x) + theta^T phi(x), exactly.
class CorrectedCateModel : public CateModel {
 public:
  CorrectedCateModel(std::shared_ptr<const CateModel> omega, Correction correction);
  Eigen::VectorXd predict_effect(const Eigen::MatrixXd& X) const override;
  Eigen::Index input_dim() const override { return omega_->input_dim(); }
  const CateModel& omega() const { return *omega_; }
  const Correction& correction() const { return correction_; }

 private:
  std::shared_ptr<const CateModel> omega_;
  Correction correction_;
};

std::unique_ptr<CorrectedCateModel> corrected_model(std::shared_ptr<const CateModel> omega,
                                                    Correction correction);

struct CorrectedFit {
  std::unique_ptr<CorrectedCateModel> model;
  PairDiagnostics diagnostics;
};

// The full two-stage pipeline:
//   1. validate the pair,
//   2. fit the base effect model on the confounded sample,
//   3. fit the correction on the unconfounded sample,
//   4. compose the corrected predictor.
// Errors are labeled with the stage they arose in.
CorrectedFit fit_corrected_cate(const Dataset& conf, const Dataset& unc,
                                const CateEstimatorSpec& spec, const EtaFeatureMap& map,
                                std::uint64_t seed);

}  // namespace grounded
