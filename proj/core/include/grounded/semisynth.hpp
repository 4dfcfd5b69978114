#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "grounded/dataset.hpp"

namespace grounded {

// Turns a constant-propensity RCT table into an (UNC, CONF, evaluation)
// triple with hidden confounding injected by selective removal of
// high-outcome treated rows.
struct InjectionSpec {
  std::string split_col;   // binary covariate; stratum A = 1, stratum B = 0
  double q_prime = 0.3;    // fraction of stratum A sampled into UNC, in (0, 1]
  std::uint64_t seed = 0;
  bool drop_split_col = true;
  std::optional<double> q_override;  // propensity; default mean(T) over the table
};

struct StratumArmCounts {
  std::int64_t total = 0;
  std::int64_t in_unc = 0;
  std::int64_t kept_in_conf = 0;
  std::int64_t removed = 0;  // neither in UNC nor in CONF
};

struct InjectionAudit {
  double q = 0.0;
  std::uint64_t seed = 0;
  // Treated "lower half" bookkeeping, computed per stratum over all treated
  // rows (before UNC removal): kept count floor(m/2) and the outcome cutoff
  // (first excluded outcome value).
  std::int64_t lower_half_kept_a = 0;
  std::int64_t lower_half_kept_b = 0;
  double outcome_cutoff_a = 0.0;
  double outcome_cutoff_b = 0.0;
  StratumArmCounts a_treated, a_control, b_treated, b_control;
};

struct InjectionResult {
  Dataset unc;        // sampled from stratum A, constant propensity attached
  Dataset conf;       // no propensity column
  Dataset eval_pool;  // ALL minus UNC
  std::vector<double> y_gt;  // ground-truth pseudo-outcomes, aligned with eval_pool
  // Row indices into the source table; CONF and eval_pool overlap, UNC is
  // disjoint from both.
  std::vector<Eigen::Index> unc_rows, conf_rows, eval_rows;
  double q = 0.0;
  InjectionAudit audit;
};

// Y / (q + T - 1): equals the signed re-weighting pseudo-outcome under
// constant propensity q.
std::vector<double> ground_truth_outcomes(const Dataset& ds, double q);

InjectionResult inject_confounding(const Dataset& all, const InjectionSpec& spec);

// Serialized audit record (counts, q, cutoffs, seed) as a JSON document.
std::string audit_to_json(const InjectionAudit& audit);

}  // namespace grounded
