#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "grounded/grounding.hpp"
#include "grounded/semisynth.hpp"
#include "grounded/simgen.hpp"

namespace grounded {

struct EvalReport {
  std::string method;
  double rmse = 0.0;
  std::int64_t n_eval = 0;
  std::uint64_t seed = 0;
  std::string config_fingerprint;
  std::string status = "ok";  // "ok" or "error: <message>"
};

double rmse(const std::vector<double>& pred, const std::vector<double>& target);
double rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& target);

// Deterministic held-out evaluation: round(holdout_fraction * n) rows of
// eval_pool are held out by seeded shuffle and the model is scored against
// y_gt on them only. holdout_rows (positions within eval_pool) are reported
// back so callers can verify the split.
EvalReport evaluate_model(const CateModel& model, const Dataset& eval_pool,
                          const std::vector<double>& y_gt, double holdout_fraction,
                          std::uint64_t seed,
                          std::vector<Eigen::Index>* holdout_rows = nullptr);

// The data a comparison run works with. conf_rows/eval_rows are row ids in a
// shared space (the source table); when present they are used to drop
// held-out evaluation rows from the CONF training sample. Empty means the
// samples are already disjoint.
struct StudyData {
  Dataset unc;
  Dataset conf;
  Dataset eval_pool;
  std::vector<double> y_gt;
  std::vector<Eigen::Index> conf_rows, eval_rows;
};

StudyData make_study(InjectionResult injection);
// Synthetic-study variant: the evaluation pool is a fresh unconfounded draw
// of n_unc rows and y_gt its pseudo-outcomes.
StudyData make_sim_study(const SimConfig& cfg);

struct BaselineOptions {
  ForestParams forest;
  std::vector<double> lambdas = default_lambda_grid();
  int cv_folds = 5;
  double holdout_fraction = 0.25;
  EtaFeatureMap map;
  double overlap_margin = kDefaultOverlapMargin;
};

// The eight standard method names:
//   "2 step RF", "2 step ridge",
//   "RF Y_GT (UNC)", "ridge Y_GT (UNC)",       regression on pseudo-outcomes
//   "RF DIFF (CONF)", "ridge DIFF (CONF)",     per-arm fits on CONF
//   "RF DIFF (UNC)", "ridge DIFF (UNC)".       per-arm fits on UNC
std::vector<std::string> default_method_names();

// Split bookkeeping for one run_baselines call, checkable by callers: the
// held-out rows never appear among the training rows.
struct BaselineRunInfo {
  std::vector<Eigen::Index> holdout_positions;  // positions within eval_pool
  std::vector<Eigen::Index> holdout_ids;        // source-table ids (when mapped)
  std::vector<Eigen::Index> conf_train_ids;     // source-table ids (when mapped)
};

// Fits and scores every requested method on one shared held-out set. A method
// failure is recorded in its report's status and does not abort the others.
// The two DIFF (CONF) fits double as the 2-step base models.
std::vector<EvalReport> run_baselines(const StudyData& study,
                                      const std::vector<std::string>& methods,
                                      const BaselineOptions& options, std::uint64_t seed,
                                      BaselineRunInfo* info = nullptr);

struct SweepPoint {
  double axis_value = 0.0;
  std::string method;
  std::uint64_t seed = 0;
  double rmse = 0.0;  // for rate sweeps this column carries ||theta - theta0||^2
  std::string status = "ok";
};

struct SweepResult {
  std::string axis;  // "q_prime" or "n_unc"
  std::vector<SweepPoint> points;
};

// Fresh injection + run_baselines per (grid value, rep) cell. Cell seeds are
// derived from (seed, cell index), so results are identical for any thread
// count; failures are recorded per cell and the sweep continues.
SweepResult sweep_q_prime(const Dataset& all, const InjectionSpec& spec_template,
                          const std::vector<double>& grid, int reps,
                          const std::vector<std::string>& methods,
                          const BaselineOptions& options, std::uint64_t seed, int threads = 0);

struct RateSweepOptions {
  CateEstimatorSpec learned_spec;      // base for the learned-omega mode
  EtaFeatureMap map;
  std::int64_t oracle_n_mc = 100000;   // Monte-Carlo sample behind the oracle omega
  double oracle_bandwidth = 0.1;
};

// Parameter-recovery sweep over n_unc: per replicate, generates a synthetic
// pair, fits the correction against either the Monte-Carlo oracle omega or a
// learned omega, and records ||theta - theta0||^2. theta0's slope sign is
// settled once by the oracle curve.
SweepResult sweep_rate(const SimConfig& cfg_template, const std::vector<std::int64_t>& n_grid,
                       int reps, std::uint64_t seed, bool oracle_omega,
                       const RateSweepOptions& options = {}, int threads = 0);

struct SweepSummaryCell {
  double axis_value = 0.0;
  std::string method;
  double median = 0.0;  // over ok cells
  std::int64_t n_ok = 0;
  std::int64_t n_failed = 0;
};

std::vector<SweepSummaryCell> summarize(const SweepResult& result);

// Least-squares slope of log(median) against log(axis value) for one method;
// the expected value for an exact 1/n rate is -1.
double loglog_slope(const std::vector<SweepSummaryCell>& summary, const std::string& method);

// Columns: axis_name, axis_value, method, seed, rmse, status. Failed cells
// leave rmse empty rather than writing NaN.
void write_sweep_csv(const SweepResult& result, const std::string& path);

}  // namespace grounded
