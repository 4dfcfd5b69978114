#include "grounded/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace grounded {

namespace {

struct TreeBuilder {
  const Eigen::MatrixXd& X;
  const Eigen::VectorXd& y;
  const ForestParams& params;
  int mtry;
  std::mt19937_64 rng;

  std::vector<Eigen::Index> samples;  // in-bag row ids, partitioned in place per node
  std::vector<TreeNode> nodes;
  std::vector<std::pair<double, double>> scratch;  // (x, y) per node/feature
  std::vector<int> feature_pool;

  struct Task {
    std::int32_t node;
    std::size_t start, end;
    int depth;
  };

  bool node_is_pure(std::size_t start, std::size_t end) const {
    const double first = y[samples[start]];
    for (std::size_t i = start + 1; i < end; ++i)
      if (y[samples[i]] != first) return false;
    return true;
  }

  void build() {
    nodes.clear();
    nodes.emplace_back();
    std::vector<Task> stack{{0, 0, samples.size(), 0}};
    while (!stack.empty()) {
      const Task task = stack.back();
      stack.pop_back();
      process(task, stack);
    }
  }

  void make_leaf(TreeNode& node, std::size_t start, std::size_t end) {
    double sum = 0.0;
    for (std::size_t i = start; i < end; ++i) sum += y[samples[i]];
    node.feature = -1;
    node.value = sum / static_cast<double>(end - start);
  }

  void process(const Task& task, std::vector<Task>& stack) {
    const std::size_t start = task.start, end = task.end;
    const std::size_t m = end - start;
    TreeNode& node = nodes[static_cast<std::size_t>(task.node)];

    const bool pure = node_is_pure(start, end);
    if (pure || m < 2 * static_cast<std::size_t>(params.min_leaf) ||
        (params.max_depth > 0 && task.depth >= params.max_depth)) {
      if (pure) {
        node.feature = -1;
        node.value = y[samples[start]];
      } else {
        make_leaf(node, start, end);
      }
      return;
    }

    double total = 0.0;
    for (std::size_t i = start; i < end; ++i) total += y[samples[i]];
    const double parent_score = total * total / static_cast<double>(m);

    // mtry distinct features, then ascending so ties resolve by feature index.
    const int d = static_cast<int>(X.cols());
    feature_pool.resize(static_cast<std::size_t>(d));
    std::iota(feature_pool.begin(), feature_pool.end(), 0);
    for (int k = 0; k < mtry; ++k) {
      std::uniform_int_distribution<int> pick(k, d - 1);
      std::swap(feature_pool[static_cast<std::size_t>(k)],
                feature_pool[static_cast<std::size_t>(pick(rng))]);
    }
    std::sort(feature_pool.begin(), feature_pool.begin() + mtry);

    double best_score = parent_score;
    int best_feature = -1;
    double best_threshold = 0.0;

    scratch.resize(m);
    for (int fi = 0; fi < mtry; ++fi) {
      const int f = feature_pool[static_cast<std::size_t>(fi)];
      for (std::size_t i = 0; i < m; ++i) {
        const Eigen::Index row = samples[start + i];
        scratch[i] = {X(row, f), y[row]};
      }
      std::sort(scratch.begin(), scratch.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });

      double left_sum = 0.0;
      const std::size_t lo = static_cast<std::size_t>(params.min_leaf);
      const std::size_t hi = m - static_cast<std::size_t>(params.min_leaf);
      for (std::size_t i = 0; i < hi; ++i) {
        left_sum += scratch[i].second;
        const std::size_t n_left = i + 1;
        if (n_left < lo) continue;
        if (scratch[i + 1].first <= scratch[i].first) continue;  // not a value boundary
        const double right_sum = total - left_sum;
        const double score = left_sum * left_sum / static_cast<double>(n_left) +
                             right_sum * right_sum / static_cast<double>(m - n_left);
        if (score > best_score) {
          best_score = score;
          best_feature = f;
          best_threshold = 0.5 * (scratch[i].first + scratch[i + 1].first);
        }
      }
    }

    if (best_feature < 0) {
      make_leaf(node, start, end);
      return;
    }

    const auto mid_it = std::partition(
        samples.begin() + static_cast<std::ptrdiff_t>(start),
        samples.begin() + static_cast<std::ptrdiff_t>(end),
        [&](Eigen::Index row) { return X(row, best_feature) <= best_threshold; });
    const std::size_t mid = static_cast<std::size_t>(mid_it - samples.begin());
    // A midpoint between distinct values always separates both sides.

    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = static_cast<std::int32_t>(nodes.size());
    node.right = node.left + 1;
    const std::int32_t left_id = node.left, right_id = node.right;
    nodes.emplace_back();
    nodes.emplace_back();
    stack.push_back({right_id, mid, end, task.depth + 1});
    stack.push_back({left_id, start, mid, task.depth + 1});
  }
};

}  // namespace

double RegressionTree::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  std::int32_t id = 0;
  while (nodes[static_cast<std::size_t>(id)].feature >= 0) {
    const TreeNode& node = nodes[static_cast<std::size_t>(id)];
    id = x[node.feature] <= node.threshold ? node.left : node.right;
  }
  return nodes[static_cast<std::size_t>(id)].value;
}

Eigen::VectorXd ForestModel::predict(const Eigen::MatrixXd& X) const {
  if (X.cols() != input_dim)
    throw ConfigError("ForestModel::predict: expected " + std::to_string(input_dim) +
                      " features, got " + std::to_string(X.cols()));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    double sum = 0.0;
    for (const auto& tree : trees) sum += tree.predict_row(X.row(r));
    out[r] = sum / static_cast<double>(trees.size());
  }
  return out;
}

ForestModel forest_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const ForestParams& params, std::uint64_t seed) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (n != y.size()) throw ConfigError("forest_fit: X and y row counts differ");
  if (params.n_trees < 1 || params.min_leaf < 1)
    throw ConfigError("forest_fit: n_trees and min_leaf must be >= 1");
  if (n < params.min_leaf)
    throw ConfigError("forest_fit: fewer rows than min_leaf");
  int mtry = params.mtry;
  if (mtry == 0) mtry = static_cast<int>((d + 2) / 3);  // ceil(d/3)
  if (mtry < 1 || mtry > d)
    throw ConfigError("forest_fit: mtry must lie in [1, d]");

  ForestModel model;
  model.params = params;
  model.params.mtry = mtry;
  model.input_dim = d;
  model.trees.resize(static_cast<std::size_t>(params.n_trees));

  const int threads = resolve_threads(params.threads, 1);
  parallel_for(params.n_trees, threads, [&](std::int64_t t) {
    TreeBuilder builder{X, y, model.params, mtry,
                        std::mt19937_64(mix_seed(seed, static_cast<std::uint64_t>(t)))};
    builder.samples.resize(static_cast<std::size_t>(n));
    if (params.bootstrap) {
      std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
      for (auto& s : builder.samples) s = pick(builder.rng);
    } else {
      std::iota(builder.samples.begin(), builder.samples.end(), 0);
    }
    builder.build();
    model.trees[static_cast<std::size_t>(t)].nodes = std::move(builder.nodes);
  });
  return model;
}

}  // namespace grounded
