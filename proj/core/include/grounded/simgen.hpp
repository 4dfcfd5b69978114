#pragma once

#include <cstdint>
#include <vector>

#include "grounded/cate.hpp"
#include "grounded/dataset.hpp"

namespace grounded {

// One-covariate synthetic study: an unconfounded sample on [-1, 1] with
// constant propensity 0.5, and a confounded sample where the hidden variable
// U is correlated with X through the treatment arm (correlation T - 0.5).
struct SimConfig {
  std::int64_t n_unc = 2000;
  std::int64_t n_conf = 20000;
  std::uint64_t seed = 0;
  double noise_scale = 0.5;
  // Off zeroes the X-U correlation in both arms, giving a confounding-free
  // variant of the same design (eta == 0) for null tests.
  bool include_confounding = true;
};

// Y = 1 + T + X + 2 T X + 0.5 X^2 + 0.75 T X^2 + U + noise_scale * eps.
double sim_outcome(double x, double t, double u, double eps, double noise_scale = 0.5);

// tau(x) = 0.75 x^2 + 2 x + 1.
double true_tau(double x);

Dataset gen_unconfounded(const SimConfig& cfg);
Dataset gen_confounded(const SimConfig& cfg);

// Same draw with the hidden confounder attached; for diagnostics and tests
// only — estimators never see U.
struct ConfoundedDraw {
  Dataset data;
  Eigen::VectorXd u;
};
ConfoundedDraw gen_confounded_with_latent(const SimConfig& cfg);

// 121 points covering [-3, 3], the confounded sample's effective range.
std::vector<double> default_truth_grid();

// Brute-force curve of the confounded arm contrast
// E[Y | T=1, X ~ x] - E[Y | T=0, X ~ x], by Epanechnikov local averaging over
// a fresh confounded draw of size n_mc. Throws DataError when a grid point
// has an empty kernel neighborhood in either arm.
std::vector<double> mc_true_omega(const std::vector<double>& xs, std::int64_t n_mc,
                                  std::uint64_t seed, double bandwidth = 0.1,
                                  bool include_confounding = true, double noise_scale = 0.5);

// The sign of the confounding slope is settled empirically: fits a line to
// tau(g) - omega_mc(g) over the default grid and returns the sign of its
// slope (+1 or -1). The magnitude is 1 by construction of the generator.
int oracle_eta_slope_sign(std::int64_t n_mc, std::uint64_t seed);

// mc_true_omega wrapped as a piecewise-linear CateModel over the given grid.
std::unique_ptr<CateModel> oracle_omega_model(const std::vector<double>& grid,
                                              std::int64_t n_mc, std::uint64_t seed,
                                              double bandwidth = 0.1,
                                              bool include_confounding = true,
                                              double noise_scale = 0.5);

}  // namespace grounded
