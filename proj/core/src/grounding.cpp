#include "grounded/grounding.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace grounded {

Eigen::Index EtaFeatureMap::output_dim(Eigen::Index d) const {
  switch (kind) {
    case Kind::identity: return d;
    case Kind::identity_plus_intercept: return d + 1;
    case Kind::polynomial: return 1 + d * degree;
  }
  throw ConfigError("EtaFeatureMap: unknown kind");
}

Eigen::MatrixXd EtaFeatureMap::apply(const Eigen::MatrixXd& X) const {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  switch (kind) {
    case Kind::identity:
      return X;
    case Kind::identity_plus_intercept: {
      Eigen::MatrixXd phi(n, d + 1);
      phi.col(0).setOnes();
      phi.rightCols(d) = X;
      return phi;
    }
    case Kind::polynomial: {
      if (degree < 1) throw ConfigError("EtaFeatureMap: polynomial degree must be >= 1");
      Eigen::MatrixXd phi(n, 1 + d * degree);
      phi.col(0).setOnes();
      Eigen::Index col = 1;
      for (Eigen::Index j = 0; j < d; ++j) {
        Eigen::ArrayXd power = X.col(j).array();
        for (int p = 1; p <= degree; ++p) {
          phi.col(col++) = power.matrix();
          if (p < degree) power *= X.col(j).array();
        }
      }
      return phi;
    }
  }
  throw ConfigError("EtaFeatureMap: unknown kind");
}

EtaFeatureMap EtaFeatureMap::parse(const std::string& text) {
  EtaFeatureMap map;
  if (text == "identity") {
    map.kind = Kind::identity;
  } else if (text == "identity+intercept" || text == "identity_plus_intercept") {
    map.kind = Kind::identity_plus_intercept;
  } else if (text.rfind("poly:", 0) == 0) {
    map.kind = Kind::polynomial;
    try {
      map.degree = std::stoi(text.substr(5));
    } catch (const std::exception&) {
      throw ConfigError("eta map: cannot parse degree in \"" + text + "\"");
    }
    if (map.degree < 1) throw ConfigError("eta map: polynomial degree must be >= 1");
  } else {
    throw ConfigError("eta map: expected identity, identity+intercept or poly:<k>, got \"" +
                      text + "\"");
  }
  return map;
}

std::string EtaFeatureMap::name() const {
  switch (kind) {
    case Kind::identity: return "identity";
    case Kind::identity_plus_intercept: return "identity+intercept";
    case Kind::polynomial: return "poly:" + std::to_string(degree);
  }
  return "?";
}

Eigen::VectorXd Correction::eta(const Eigen::MatrixXd& X) const {
  return feature_map.apply(X) * theta;
}

double signed_weight(double t, double e, double margin) {
  if (t != 0.0 && t != 1.0) throw ConfigError("signed_weight: treatment must be 0 or 1");
  if (!(margin > 0.0 && margin < 0.5)) throw ConfigError("signed_weight: margin must be in (0, 0.5)");
  if (!(e >= margin && e <= 1.0 - margin))
    throw OverlapError("propensity " + std::to_string(e) + " outside [" + std::to_string(margin) +
                       ", " + std::to_string(1.0 - margin) + "]");
  return t == 1.0 ? 1.0 / e : -1.0 / (1.0 - e);
}

Eigen::VectorXd pseudo_outcomes(const Dataset& ds, double margin, bool allow_constant_propensity) {
  ds.validate();
  Eigen::VectorXd e;
  if (ds.propensity) {
    e = *ds.propensity;
  } else {
    if (!allow_constant_propensity)
      throw DataError("pseudo_outcomes: no propensity column and constant-propensity "
                      "fallback disabled");
    const double q = ds.treatment.mean();
    if (!(q > 0.0 && q < 1.0))
      throw DataError("pseudo_outcomes: constant-propensity fallback needs both arms present");
    log_warn("no propensity column; using constant e = mean(treatment) = " + std::to_string(q));
    e = Eigen::VectorXd::Constant(ds.n(), q);
  }
  Eigen::VectorXd z(ds.n());
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    try {
      signed_weight(ds.treatment[i], e[i], margin);  // overlap check
    } catch (const OverlapError& err) {
      throw OverlapError(std::string(err.what()) + " at data row " + std::to_string(i + 1));
    }
    // Division form rather than weight * outcome: bit-identical to the
    // constant-propensity ground-truth transform Y / (q + T - 1).
    z[i] = ds.treatment[i] == 1.0 ? ds.outcome[i] / e[i] : ds.outcome[i] / (e[i] - 1.0);
  }
  return z;
}

Correction fit_correction(const Dataset& unc, const CateModel& omega, const EtaFeatureMap& map,
                          double margin, bool allow_constant_propensity) {
  if (omega.input_dim() != unc.d())
    throw ConfigError("fit_correction: omega expects " + std::to_string(omega.input_dim()) +
                      " features, dataset has " + std::to_string(unc.d()));
  const Eigen::MatrixXd phi = map.apply(unc.features);
  const Eigen::Index p = phi.cols();
  if (unc.n() < p)
    throw DataError("fit_correction: " + std::to_string(unc.n()) + " rows cannot identify " +
                    std::to_string(p) + " correction parameters");

  const Eigen::VectorXd residual =
      pseudo_outcomes(unc, margin, allow_constant_propensity) -
      omega.predict_effect(unc.features);

  const Eigen::BDCSVD<Eigen::MatrixXd> svd(phi, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(p - 1);
  const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (!(cond < kSingularityThreshold))
    throw IdentifiabilityError(
        "correction design is rank-deficient (condition number " + std::to_string(cond) +
        "): the feature second-moment matrix on the unconfounded sample is singular, so the "
        "confounding parameters are not identifiable");

  Correction c;
  c.theta = svd.solve(residual);
  c.feature_map = map;
  c.design_condition_number = cond;
  c.n_used = unc.n();
  if (!c.theta.allFinite()) throw DataError("fit_correction: non-finite solution");
  return c;
}

CorrectedCateModel::CorrectedCateModel(std::shared_ptr<const CateModel> omega,
                                       Correction correction)
    : omega_(std::move(omega)), correction_(std::move(correction)) {
  if (!omega_) throw ConfigError("CorrectedCateModel: null base model");
  if (correction_.feature_map.output_dim(omega_->input_dim()) != correction_.theta.size())
    throw ConfigError("CorrectedCateModel: correction dimension does not match base model");
}

Eigen::VectorXd CorrectedCateModel::predict_effect(const Eigen::MatrixXd& X) const {
  return omega_->predict_effect(X) + correction_.eta(X);
}

std::unique_ptr<CorrectedCateModel> corrected_model(std::shared_ptr<const CateModel> omega,
                                                    Correction correction) {
  return std::make_unique<CorrectedCateModel>(std::move(omega), std::move(correction));
}

CorrectedFit fit_corrected_cate(const Dataset& conf, const Dataset& unc,
                                const CateEstimatorSpec& spec, const EtaFeatureMap& map,
                                std::uint64_t seed) {
  CorrectedFit out;
  try {
    out.diagnostics = validate_pair(conf, unc);
  } catch (const std::exception& err) {
    throw DataError("[stage 1: pair validation] " + std::string(err.what()));
  }
  std::shared_ptr<const CateModel> omega;
  try {
    omega = fit_cate(conf, spec, mix_seed(seed, 10));
  } catch (const std::exception& err) {
    throw DataError("[stage 2: base effect fit] " + std::string(err.what()));
  }
  Correction correction;
  try {
    correction = fit_correction(unc, *omega, map, spec.overlap_margin,
                                spec.allow_constant_propensity);
  } catch (const IdentifiabilityError& err) {
    throw IdentifiabilityError("[stage 3: correction fit] " + std::string(err.what()));
  } catch (const std::exception& err) {
    throw DataError("[stage 3: correction fit] " + std::string(err.what()));
  }
  out.model = corrected_model(std::move(omega), std::move(correction));
  return out;
}

}  // namespace grounded
