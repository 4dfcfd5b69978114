#include "grounded/semisynth.hpp"

#include <json.hpp>

#include <algorithm>
#include <random>

namespace grounded {

namespace {

Dataset drop_feature(const Dataset& ds, Eigen::Index col) {
  Dataset out;
  out.treatment = ds.treatment;
  out.outcome = ds.outcome;
  out.propensity = ds.propensity;
  out.features.resize(ds.n(), ds.d() - 1);
  Eigen::Index w = 0;
  for (Eigen::Index c = 0; c < ds.d(); ++c) {
    if (c == col) continue;
    out.features.col(w++) = ds.features.col(c);
  }
  for (Eigen::Index c = 0; c < ds.d(); ++c)
    if (c != col) out.feature_names.push_back(ds.feature_names[static_cast<std::size_t>(c)]);
  return out;
}

}  // namespace

std::vector<double> ground_truth_outcomes(const Dataset& ds, double q) {
  if (!(q > 0.0 && q < 1.0))
    throw ConfigError("ground_truth_outcomes: q must lie strictly in (0,1)");
  std::vector<double> out(static_cast<std::size_t>(ds.n()));
  for (Eigen::Index i = 0; i < ds.n(); ++i)
    out[static_cast<std::size_t>(i)] = ds.outcome[i] / (q + ds.treatment[i] - 1.0);
  return out;
}

InjectionResult inject_confounding(const Dataset& all, const InjectionSpec& spec) {
  all.validate();
  if (!(spec.q_prime > 0.0 && spec.q_prime <= 1.0))
    throw ConfigError("inject_confounding: q_prime must lie in (0, 1]");
  const Eigen::Index split_idx = all.feature_index(spec.split_col);
  for (Eigen::Index i = 0; i < all.n(); ++i) {
    const double v = all.features(i, split_idx);
    if (v != 0.0 && v != 1.0)
      throw DataError("inject_confounding: split column \"" + spec.split_col +
                      "\" is not binary at data row " + std::to_string(i + 1));
  }

  const double q = spec.q_override ? *spec.q_override : all.treatment.mean();
  if (!(q > 0.0 && q < 1.0))
    throw DataError("inject_confounding: propensity q = " + std::to_string(q) +
                    " must lie strictly in (0,1)");

  std::vector<Eigen::Index> stratum_a, stratum_b;
  for (Eigen::Index i = 0; i < all.n(); ++i)
    (all.features(i, split_idx) == 1.0 ? stratum_a : stratum_b).push_back(i);
  if (stratum_a.empty() || stratum_b.empty())
    throw DataError("inject_confounding: empty stratum (A=" + std::to_string(stratum_a.size()) +
                    ", B=" + std::to_string(stratum_b.size()) + ")");

  const auto treated_of = [&](const std::vector<Eigen::Index>& rows) {
    std::vector<Eigen::Index> out;
    for (const Eigen::Index i : rows)
      if (all.treatment[i] == 1.0) out.push_back(i);
    return out;
  };
  const std::vector<Eigen::Index> treated_a = treated_of(stratum_a);
  const std::vector<Eigen::Index> treated_b = treated_of(stratum_b);
  if (treated_a.empty() || treated_a.size() == stratum_a.size() || treated_b.empty() ||
      treated_b.size() == stratum_b.size())
    throw DataError("inject_confounding: a stratum has an empty treatment arm");

  // UNC: uniform random q_prime-fraction of stratum A.
  const std::int64_t k =
      round_half_away(spec.q_prime * static_cast<double>(stratum_a.size()));
  if (k < 1) throw DataError("inject_confounding: q_prime yields an empty UNC sample");
  std::vector<Eigen::Index> unc_rows;
  std::mt19937_64 rng(mix_seed(spec.seed, 0x1A7EC7));
  std::sample(stratum_a.begin(), stratum_a.end(), std::back_inserter(unc_rows),
              static_cast<std::size_t>(k), rng);

  std::vector<char> in_unc(static_cast<std::size_t>(all.n()), 0);
  for (const Eigen::Index i : unc_rows) in_unc[static_cast<std::size_t>(i)] = 1;

  // "Lower half" of treated outcomes, per stratum, computed over all treated
  // rows (before UNC removal): ascending by (outcome, row) and keep the
  // floor(m/2) lowest.
  std::vector<char> kept(static_cast<std::size_t>(all.n()), 0);
  const auto mark_lower_half = [&](std::vector<Eigen::Index> treated, std::int64_t* kept_count,
                                   double* cutoff) {
    std::sort(treated.begin(), treated.end(), [&](Eigen::Index l, Eigen::Index r) {
      if (all.outcome[l] != all.outcome[r]) return all.outcome[l] < all.outcome[r];
      return l < r;
    });
    const std::size_t half = treated.size() / 2;
    for (std::size_t i = 0; i < half; ++i) kept[static_cast<std::size_t>(treated[i])] = 1;
    *kept_count = static_cast<std::int64_t>(half);
    *cutoff = half < treated.size() ? all.outcome[treated[half]] : all.outcome[treated.back()];
  };

  InjectionResult result;
  result.q = q;
  result.audit.q = q;
  result.audit.seed = spec.seed;
  mark_lower_half(treated_a, &result.audit.lower_half_kept_a, &result.audit.outcome_cutoff_a);
  mark_lower_half(treated_b, &result.audit.lower_half_kept_b, &result.audit.outcome_cutoff_b);

  // CONF: controls not in UNC, plus kept treated not in UNC. UNC rows are
  // excluded from CONF entirely, so the two studies share no rows.
  std::vector<Eigen::Index> conf_rows, eval_rows;
  for (Eigen::Index i = 0; i < all.n(); ++i) {
    if (!in_unc[static_cast<std::size_t>(i)]) {
      eval_rows.push_back(i);
      if (all.treatment[i] == 0.0 || kept[static_cast<std::size_t>(i)]) conf_rows.push_back(i);
    }
  }

  const auto fill_counts = [&](const std::vector<Eigen::Index>& rows, double arm,
                               StratumArmCounts* counts) {
    for (const Eigen::Index i : rows) {
      if (all.treatment[i] != arm) continue;
      ++counts->total;
      if (in_unc[static_cast<std::size_t>(i)]) {
        ++counts->in_unc;
      } else if (arm == 0.0 || kept[static_cast<std::size_t>(i)]) {
        ++counts->kept_in_conf;
      } else {
        ++counts->removed;
      }
    }
  };
  fill_counts(stratum_a, 1.0, &result.audit.a_treated);
  fill_counts(stratum_a, 0.0, &result.audit.a_control);
  fill_counts(stratum_b, 1.0, &result.audit.b_treated);
  fill_counts(stratum_b, 0.0, &result.audit.b_control);

  std::sort(unc_rows.begin(), unc_rows.end());
  result.unc = all.rows(unc_rows);
  result.unc.propensity = Eigen::VectorXd::Constant(result.unc.n(), q);
  result.conf = all.rows(conf_rows);
  result.conf.propensity.reset();
  result.eval_pool = all.rows(eval_rows);
  result.eval_pool.propensity.reset();
  result.y_gt = ground_truth_outcomes(result.eval_pool, q);
  result.unc_rows = std::move(unc_rows);
  result.conf_rows = std::move(conf_rows);
  result.eval_rows = std::move(eval_rows);

  if (spec.drop_split_col) {
    const auto drop = [&](Dataset& ds) {
      ds = drop_feature(ds, ds.feature_index(spec.split_col));
    };
    drop(result.unc);
    drop(result.conf);
    drop(result.eval_pool);
  }
  return result;
}

std::string audit_to_json(const InjectionAudit& audit) {
  nlohmann::json j;
  j["q"] = audit.q;
  j["seed"] = audit.seed;
  j["lower_half_kept"] = {{"stratum_a", audit.lower_half_kept_a},
                          {"stratum_b", audit.lower_half_kept_b}};
  j["outcome_cutoff"] = {{"stratum_a", audit.outcome_cutoff_a},
                         {"stratum_b", audit.outcome_cutoff_b}};
  const auto cell = [](const StratumArmCounts& c) {
    return nlohmann::json{{"total", c.total},
                          {"in_unc", c.in_unc},
                          {"kept_in_conf", c.kept_in_conf},
                          {"removed", c.removed}};
  };
  j["counts"] = {{"a_treated", cell(audit.a_treated)},
                 {"a_control", cell(audit.a_control)},
                 {"b_treated", cell(audit.b_treated)},
                 {"b_control", cell(audit.b_control)}};
  return j.dump(2);
}

}  // namespace grounded
