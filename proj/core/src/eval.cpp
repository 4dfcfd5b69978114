#include "grounded/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

namespace grounded {

double rmse(const std::vector<double>& pred, const std::vector<double>& target) {
  if (pred.size() != target.size())
    throw ConfigError("rmse: length mismatch (" + std::to_string(pred.size()) + " vs " +
                      std::to_string(target.size()) + ")");
  if (pred.empty()) throw ConfigError("rmse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(pred.size()));
}

double rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& target) {
  if (pred.size() != target.size()) throw ConfigError("rmse: length mismatch");
  if (pred.size() == 0) throw ConfigError("rmse: empty input");
  return std::sqrt((pred - target).squaredNorm() / static_cast<double>(pred.size()));
}

EvalReport evaluate_model(const CateModel& model, const Dataset& eval_pool,
                          const std::vector<double>& y_gt, double holdout_fraction,
                          std::uint64_t seed, std::vector<Eigen::Index>* holdout_rows) {
  if (static_cast<Eigen::Index>(y_gt.size()) != eval_pool.n())
    throw ConfigError("evaluate_model: y_gt length does not match eval pool");
  const auto holdout = split_indices(eval_pool.n(), holdout_fraction, seed).first;
  if (holdout_rows) *holdout_rows = holdout;

  Eigen::MatrixXd X(static_cast<Eigen::Index>(holdout.size()), eval_pool.d());
  std::vector<double> target(holdout.size());
  for (std::size_t i = 0; i < holdout.size(); ++i) {
    X.row(static_cast<Eigen::Index>(i)) = eval_pool.features.row(holdout[i]);
    target[i] = y_gt[static_cast<std::size_t>(holdout[i])];
  }
  const Eigen::VectorXd pred = model.predict_effect(X);
  std::vector<double> pred_v(pred.data(), pred.data() + pred.size());

  EvalReport report;
  report.rmse = rmse(pred_v, target);
  report.n_eval = static_cast<std::int64_t>(holdout.size());
  report.seed = seed;
  report.config_fingerprint = "holdout_fraction=" + std::to_string(holdout_fraction) +
                              ";n_pool=" + std::to_string(eval_pool.n());
  return report;
}

StudyData make_study(InjectionResult injection) {
  StudyData study;
  study.unc = std::move(injection.unc);
  study.conf = std::move(injection.conf);
  study.eval_pool = std::move(injection.eval_pool);
  study.y_gt = std::move(injection.y_gt);
  study.conf_rows = std::move(injection.conf_rows);
  study.eval_rows = std::move(injection.eval_rows);
  return study;
}

StudyData make_sim_study(const SimConfig& cfg) {
  StudyData study;
  study.unc = gen_unconfounded(cfg);
  study.conf = gen_confounded(cfg);
  SimConfig eval_cfg = cfg;
  eval_cfg.seed = mix_seed(cfg.seed, 0xE7A1);
  study.eval_pool = gen_unconfounded(eval_cfg);
  const Eigen::VectorXd z = pseudo_outcomes(study.eval_pool);
  study.y_gt.assign(z.data(), z.data() + z.size());
  return study;
}

std::vector<std::string> default_method_names() {
  return {"2 step RF",      "2 step ridge",      "RF Y_GT (UNC)",  "ridge Y_GT (UNC)",
          "RF DIFF (CONF)", "ridge DIFF (CONF)", "RF DIFF (UNC)",  "ridge DIFF (UNC)"};
}

namespace {

struct MethodPlan {
  std::string name;
  BaseLearner base = BaseLearner::forest;
  enum class Kind { two_step, ygt_unc, diff_conf, diff_unc } kind = Kind::two_step;
};

MethodPlan parse_method(const std::string& name) {
  MethodPlan plan;
  plan.name = name;
  if (name.find("RF") != std::string::npos) {
    plan.base = BaseLearner::forest;
  } else if (name.find("ridge") != std::string::npos) {
    plan.base = BaseLearner::ridge_cv;
  } else {
    throw ConfigError("unknown method \"" + name + "\" (no RF/ridge base)");
  }
  if (name.rfind("2 step", 0) == 0) {
    plan.kind = MethodPlan::Kind::two_step;
  } else if (name.find("Y_GT (UNC)") != std::string::npos) {
    plan.kind = MethodPlan::Kind::ygt_unc;
  } else if (name.find("DIFF (CONF)") != std::string::npos) {
    plan.kind = MethodPlan::Kind::diff_conf;
  } else if (name.find("DIFF (UNC)") != std::string::npos) {
    plan.kind = MethodPlan::Kind::diff_unc;
  } else {
    throw ConfigError("unknown method \"" + name + "\"");
  }
  return plan;
}

RegressorSpec base_spec(const BaselineOptions& options, BaseLearner base) {
  RegressorSpec spec;
  spec.kind = base;
  spec.forest = options.forest;
  spec.lambdas = options.lambdas;
  spec.cv_folds = options.cv_folds;
  return spec;
}

// Stable per-family seed streams, shared where fits are shared.
constexpr std::uint64_t kStreamHoldout = 100;
constexpr std::uint64_t kStreamDiffConfRf = 101;
constexpr std::uint64_t kStreamDiffConfRidge = 102;
constexpr std::uint64_t kStreamDiffUncRf = 103;
constexpr std::uint64_t kStreamDiffUncRidge = 104;
constexpr std::uint64_t kStreamYgtRf = 105;
constexpr std::uint64_t kStreamYgtRidge = 106;

}  // namespace

std::vector<EvalReport> run_baselines(const StudyData& study,
                                      const std::vector<std::string>& methods,
                                      const BaselineOptions& options, std::uint64_t seed,
                                      BaselineRunInfo* info) {
  std::vector<MethodPlan> plans;
  plans.reserve(methods.size());
  for (const auto& m : methods) plans.push_back(parse_method(m));

  const auto holdout =
      split_indices(study.eval_pool.n(), options.holdout_fraction,
                    mix_seed(seed, kStreamHoldout))
          .first;
  if (info) info->holdout_positions = holdout;

  Eigen::MatrixXd Xh(static_cast<Eigen::Index>(holdout.size()), study.eval_pool.d());
  std::vector<double> gt(holdout.size());
  for (std::size_t i = 0; i < holdout.size(); ++i) {
    Xh.row(static_cast<Eigen::Index>(i)) = study.eval_pool.features.row(holdout[i]);
    gt[i] = study.y_gt[static_cast<std::size_t>(holdout[i])];
  }

  // Held-out rows never feed any training fit: drop them from CONF when the
  // shared row-id mapping is available (UNC is disjoint by construction).
  Dataset conf_train = study.conf;
  if (!study.conf_rows.empty() && !study.eval_rows.empty()) {
    std::set<Eigen::Index> held;
    for (const Eigen::Index pos : holdout)
      held.insert(study.eval_rows[static_cast<std::size_t>(pos)]);
    std::vector<Eigen::Index> keep;
    for (std::size_t i = 0; i < study.conf_rows.size(); ++i)
      if (!held.count(study.conf_rows[i])) keep.push_back(static_cast<Eigen::Index>(i));
    conf_train = study.conf.rows(keep);
    if (info) {
      info->holdout_ids.assign(held.begin(), held.end());
      for (const Eigen::Index k : keep)
        info->conf_train_ids.push_back(study.conf_rows[static_cast<std::size_t>(k)]);
    }
  }

  const std::string fingerprint =
      "n_unc=" + std::to_string(study.unc.n()) + ";n_conf_train=" +
      std::to_string(conf_train.n()) + ";n_holdout=" + std::to_string(holdout.size()) +
      ";holdout_fraction=" + std::to_string(options.holdout_fraction);

  // DIFF (CONF) doubles as the 2-step base model; fit at most once per base.
  std::map<int, std::shared_ptr<const CateModel>> diff_conf_cache;
  std::map<int, std::string> diff_conf_error;
  const auto diff_conf_model = [&](BaseLearner base) -> std::shared_ptr<const CateModel> {
    const int key = static_cast<int>(base);
    if (diff_conf_error.count(key)) throw DataError(diff_conf_error.at(key));
    auto it = diff_conf_cache.find(key);
    if (it != diff_conf_cache.end()) return it->second;
    CateEstimatorSpec spec;
    spec.kind = CateKind::difference_of_regressions;
    spec.base = base_spec(options, base);
    spec.overlap_margin = options.overlap_margin;
    try {
      std::shared_ptr<const CateModel> model =
          fit_cate(conf_train, spec,
                   mix_seed(seed, base == BaseLearner::forest ? kStreamDiffConfRf
                                                              : kStreamDiffConfRidge));
      diff_conf_cache[key] = model;
      return model;
    } catch (const std::exception& err) {
      diff_conf_error[key] = err.what();
      throw;
    }
  };

  std::vector<EvalReport> reports;
  reports.reserve(plans.size());
  for (const auto& plan : plans) {
    EvalReport report;
    report.method = plan.name;
    report.seed = seed;
    report.n_eval = static_cast<std::int64_t>(holdout.size());
    report.config_fingerprint = fingerprint;
    try {
      Eigen::VectorXd pred;
      switch (plan.kind) {
        case MethodPlan::Kind::two_step: {
          const auto omega = diff_conf_model(plan.base);
          const Correction correction =
              fit_correction(study.unc, *omega, options.map, options.overlap_margin);
          pred = omega->predict_effect(Xh) + correction.eta(Xh);
          break;
        }
        case MethodPlan::Kind::ygt_unc: {
          CateEstimatorSpec spec;
          spec.kind = CateKind::pseudo_outcome_regression;
          spec.base = base_spec(options, plan.base);
          spec.overlap_margin = options.overlap_margin;
          const auto model =
              fit_cate(study.unc, spec,
                       mix_seed(seed, plan.base == BaseLearner::forest ? kStreamYgtRf
                                                                       : kStreamYgtRidge));
          pred = model->predict_effect(Xh);
          break;
        }
        case MethodPlan::Kind::diff_conf: {
          pred = diff_conf_model(plan.base)->predict_effect(Xh);
          break;
        }
        case MethodPlan::Kind::diff_unc: {
          CateEstimatorSpec spec;
          spec.kind = CateKind::difference_of_regressions;
          spec.base = base_spec(options, plan.base);
          spec.overlap_margin = options.overlap_margin;
          const auto model =
              fit_cate(study.unc, spec,
                       mix_seed(seed, plan.base == BaseLearner::forest ? kStreamDiffUncRf
                                                                       : kStreamDiffUncRidge));
          pred = model->predict_effect(Xh);
          break;
        }
      }
      std::vector<double> pred_v(pred.data(), pred.data() + pred.size());
      report.rmse = rmse(pred_v, gt);
    } catch (const std::exception& err) {
      report.status = std::string("error: ") + err.what();
      report.rmse = 0.0;
    }
    reports.push_back(std::move(report));
  }
  return reports;
}

SweepResult sweep_q_prime(const Dataset& all, const InjectionSpec& spec_template,
                          const std::vector<double>& grid, int reps,
                          const std::vector<std::string>& methods,
                          const BaselineOptions& options, std::uint64_t seed, int threads) {
  if (grid.empty()) throw ConfigError("sweep_q_prime: empty grid");
  if (reps < 1) throw ConfigError("sweep_q_prime: reps must be >= 1");
  for (const auto& m : methods) parse_method(m);  // validate up front

  SweepResult result;
  result.axis = "q_prime";
  const std::int64_t cells = static_cast<std::int64_t>(grid.size()) * reps;
  result.points.resize(static_cast<std::size_t>(cells) * methods.size());

  parallel_for(cells, resolve_threads(threads, 0), [&](std::int64_t cell) {
    const std::size_t gi = static_cast<std::size_t>(cell / reps);
    const std::uint64_t cell_seed = mix_seed(seed, static_cast<std::uint64_t>(cell));
    std::vector<EvalReport> reports;
    std::string cell_error;
    try {
      InjectionSpec spec = spec_template;
      spec.q_prime = grid[gi];
      spec.seed = mix_seed(cell_seed, 1);
      const StudyData study = make_study(inject_confounding(all, spec));
      reports = run_baselines(study, methods, options, mix_seed(cell_seed, 2));
    } catch (const std::exception& err) {
      cell_error = std::string("error: ") + err.what();
    }
    for (std::size_t m = 0; m < methods.size(); ++m) {
      SweepPoint& point =
          result.points[static_cast<std::size_t>(cell) * methods.size() + m];
      point.axis_value = grid[gi];
      point.method = methods[m];
      point.seed = cell_seed;
      if (!cell_error.empty()) {
        point.status = cell_error;
      } else {
        point.rmse = reports[m].rmse;
        point.status = reports[m].status;
      }
    }
  });
  return result;
}

SweepResult sweep_rate(const SimConfig& cfg_template, const std::vector<std::int64_t>& n_grid,
                       int reps, std::uint64_t seed, bool oracle_omega,
                       const RateSweepOptions& options, int threads) {
  if (n_grid.empty()) throw ConfigError("sweep_rate: empty n grid");
  if (reps < 1) throw ConfigError("sweep_rate: reps must be >= 1");

  // theta0: slope coordinate carries the oracle-determined sign, everything
  // else (including the intercept, when present) is zero.
  const int sign = cfg_template.include_confounding
                       ? oracle_eta_slope_sign(options.oracle_n_mc, mix_seed(seed, 0x516E))
                       : 0;
  const Eigen::Index p = options.map.output_dim(1);
  Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(p);
  const Eigen::Index slope_coord = options.map.kind == EtaFeatureMap::Kind::identity ? 0 : 1;
  theta0[slope_coord] = sign;

  const std::string method =
      oracle_omega
          ? "2 step (oracle omega)"
          : std::string("2 step (") +
                (options.learned_spec.base.kind == BaseLearner::forest ? "RF" : "ridge") + ")";

  SweepResult result;
  result.axis = "n_unc";
  const std::int64_t cells = static_cast<std::int64_t>(n_grid.size()) * reps;
  result.points.resize(static_cast<std::size_t>(cells));
  const std::vector<double> oracle_grid = default_truth_grid();

  parallel_for(cells, resolve_threads(threads, 0), [&](std::int64_t cell) {
    const std::size_t ni = static_cast<std::size_t>(cell / reps);
    const std::uint64_t cell_seed = mix_seed(seed, static_cast<std::uint64_t>(cell));
    SweepPoint& point = result.points[static_cast<std::size_t>(cell)];
    point.axis_value = static_cast<double>(n_grid[ni]);
    point.method = method;
    point.seed = cell_seed;
    try {
      SimConfig cfg = cfg_template;
      cfg.n_unc = n_grid[ni];
      cfg.seed = mix_seed(cell_seed, 3);
      const Dataset unc = gen_unconfounded(cfg);
      std::unique_ptr<CateModel> omega;
      if (oracle_omega) {
        omega = oracle_omega_model(oracle_grid, options.oracle_n_mc, mix_seed(cell_seed, 4),
                                   options.oracle_bandwidth, cfg.include_confounding,
                                   cfg.noise_scale);
      } else {
        omega = fit_cate(gen_confounded(cfg), options.learned_spec, mix_seed(cell_seed, 5));
      }
      const Correction c = fit_correction(unc, *omega, options.map);
      point.rmse = (c.theta - theta0).squaredNorm();
    } catch (const std::exception& err) {
      point.status = std::string("error: ") + err.what();
    }
  });
  return result;
}

std::vector<SweepSummaryCell> summarize(const SweepResult& result) {
  std::vector<std::pair<double, std::string>> order;
  std::map<std::pair<double, std::string>, std::vector<double>> ok;
  std::map<std::pair<double, std::string>, std::int64_t> failed;
  for (const auto& point : result.points) {
    const auto key = std::make_pair(point.axis_value, point.method);
    if (!ok.count(key) && !failed.count(key)) order.push_back(key);
    if (point.status == "ok") {
      ok[key].push_back(point.rmse);
    } else {
      ++failed[key];
    }
  }
  std::vector<SweepSummaryCell> out;
  for (const auto& key : order) {
    SweepSummaryCell cell;
    cell.axis_value = key.first;
    cell.method = key.second;
    auto& values = ok[key];
    cell.n_ok = static_cast<std::int64_t>(values.size());
    cell.n_failed = failed.count(key) ? failed[key] : 0;
    if (!values.empty()) {
      std::sort(values.begin(), values.end());
      const std::size_t mid = values.size() / 2;
      cell.median = values.size() % 2 == 1 ? values[mid]
                                           : 0.5 * (values[mid - 1] + values[mid]);
    }
    out.push_back(cell);
  }
  return out;
}

double loglog_slope(const std::vector<SweepSummaryCell>& summary, const std::string& method) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::int64_t n = 0;
  for (const auto& cell : summary) {
    if (cell.method != method || cell.n_ok == 0 || !(cell.median > 0.0)) continue;
    const double lx = std::log(cell.axis_value);
    const double ly = std::log(cell.median);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) throw ConfigError("loglog_slope: need at least two grid points for " + method);
  const double dn = static_cast<double>(n);
  return (sxy - sx * sy / dn) / (sxx - sx * sx / dn);
}

namespace {
std::string format_double_cell(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += (c == '"') ? std::string("\"\"") : std::string(1, c);
  out += '"';
  return out;
}
}  // namespace

void write_sweep_csv(const SweepResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open file for writing: " + path);
  out << "axis_name,axis_value,method,seed,rmse,status\n";
  for (const auto& point : result.points) {
    out << result.axis << ',' << format_double_cell(point.axis_value) << ','
        << csv_quote(point.method) << ',' << point.seed << ','
        << (point.status == "ok" ? format_double_cell(point.rmse) : std::string()) << ','
        << csv_quote(point.status) << '\n';
  }
}

}  // namespace grounded
