#include "grounded/simgen.hpp"

#include <cmath>
#include <random>

namespace grounded {

namespace {
// Independent seed streams for the two generators, so one SimConfig yields an
// independent pair.
constexpr std::uint64_t kUncStream = 0xA11CE;
constexpr std::uint64_t kConfStream = 0xB0B;

void check_config(const SimConfig& cfg) {
  if (cfg.n_unc < 1 || cfg.n_conf < 1)
    throw ConfigError("SimConfig: sample sizes must be >= 1");
  if (cfg.noise_scale < 0.0) throw ConfigError("SimConfig: noise_scale must be >= 0");
}
}  // namespace

double sim_outcome(double x, double t, double u, double eps, double noise_scale) {
  return 1.0 + t + x + 2.0 * t * x + 0.5 * x * x + 0.75 * t * x * x + u + noise_scale * eps;
}

double true_tau(double x) { return 0.75 * x * x + 2.0 * x + 1.0; }

Dataset gen_unconfounded(const SimConfig& cfg) {
  check_config(cfg);
  std::mt19937_64 rng(mix_seed(cfg.seed, kUncStream));
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);

  Dataset ds;
  ds.features.resize(cfg.n_unc, 1);
  ds.feature_names = {"x"};
  ds.treatment.resize(cfg.n_unc);
  ds.outcome.resize(cfg.n_unc);
  ds.propensity.emplace(Eigen::VectorXd::Constant(cfg.n_unc, 0.5));
  for (Eigen::Index i = 0; i < cfg.n_unc; ++i) {
    const double x = unif(rng);
    const double u = normal(rng);
    const double t = coin(rng) ? 1.0 : 0.0;
    const double eps = normal(rng);
    ds.features(i, 0) = x;
    ds.treatment[i] = t;
    ds.outcome[i] = sim_outcome(x, t, u, eps, cfg.noise_scale);
  }
  return ds;
}

ConfoundedDraw gen_confounded_with_latent(const SimConfig& cfg) {
  check_config(cfg);
  std::mt19937_64 rng(mix_seed(cfg.seed, kConfStream));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);

  ConfoundedDraw draw;
  Dataset& ds = draw.data;
  ds.features.resize(cfg.n_conf, 1);
  ds.feature_names = {"x"};
  ds.treatment.resize(cfg.n_conf);
  ds.outcome.resize(cfg.n_conf);
  draw.u.resize(cfg.n_conf);
  for (Eigen::Index i = 0; i < cfg.n_conf; ++i) {
    const double t = coin(rng) ? 1.0 : 0.0;
    // (X, U) | T is bivariate normal with unit variances and covariance
    // rho = T - 0.5, realized as U = rho X + sqrt(1 - rho^2) Z.
    const double rho = cfg.include_confounding ? t - 0.5 : 0.0;
    const double x = normal(rng);
    const double z = normal(rng);
    const double u = rho * x + std::sqrt(1.0 - rho * rho) * z;
    const double eps = normal(rng);
    ds.features(i, 0) = x;
    ds.treatment[i] = t;
    ds.outcome[i] = sim_outcome(x, t, u, eps, cfg.noise_scale);
    draw.u[i] = u;
  }
  return draw;
}

Dataset gen_confounded(const SimConfig& cfg) {
  return gen_confounded_with_latent(cfg).data;
}

std::vector<double> default_truth_grid() {
  std::vector<double> grid(121);
  for (std::size_t i = 0; i < grid.size(); ++i)
    grid[i] = -3.0 + 6.0 * static_cast<double>(i) / 120.0;
  return grid;
}

std::vector<double> mc_true_omega(const std::vector<double>& xs, std::int64_t n_mc,
                                  std::uint64_t seed, double bandwidth,
                                  bool include_confounding, double noise_scale) {
  if (n_mc < 10000) throw ConfigError("mc_true_omega: n_mc must be >= 10000");
  if (bandwidth <= 0.0) throw ConfigError("mc_true_omega: bandwidth must be positive");
  SimConfig cfg;
  cfg.n_conf = n_mc;
  cfg.seed = seed;
  cfg.include_confounding = include_confounding;
  cfg.noise_scale = noise_scale;
  const Dataset sample = gen_confounded(cfg);

  std::vector<double> out(xs.size());
  for (std::size_t g = 0; g < xs.size(); ++g) {
    double w1 = 0.0, s1 = 0.0, w0 = 0.0, s0 = 0.0;
    for (Eigen::Index i = 0; i < sample.n(); ++i) {
      const double d = (sample.features(i, 0) - xs[g]) / bandwidth;
      if (d <= -1.0 || d >= 1.0) continue;
      const double w = 1.0 - d * d;
      if (sample.treatment[i] == 1.0) {
        w1 += w;
        s1 += w * sample.outcome[i];
      } else {
        w0 += w;
        s0 += w * sample.outcome[i];
      }
    }
    if (w1 <= 0.0 || w0 <= 0.0)
      throw DataError("mc_true_omega: empty kernel neighborhood at x = " + std::to_string(xs[g]));
    out[g] = s1 / w1 - s0 / w0;
  }
  return out;
}

int oracle_eta_slope_sign(std::int64_t n_mc, std::uint64_t seed) {
  const std::vector<double> grid = default_truth_grid();
  const std::vector<double> omega = mc_true_omega(grid, n_mc, seed);
  // Least-squares slope of (tau - omega) against x over the grid.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double d = true_tau(grid[i]) - omega[i];
    sx += grid[i];
    sy += d;
    sxx += grid[i] * grid[i];
    sxy += grid[i] * d;
  }
  const double slope = (sxy - sx * sy / n) / (sxx - sx * sx / n);
  return slope >= 0.0 ? 1 : -1;
}

std::unique_ptr<CateModel> oracle_omega_model(const std::vector<double>& grid, std::int64_t n_mc,
                                              std::uint64_t seed, double bandwidth,
                                              bool include_confounding, double noise_scale) {
  return std::make_unique<GridCateModel>(
      grid, mc_true_omega(grid, n_mc, seed, bandwidth, include_confounding, noise_scale));
}

}  // namespace grounded
