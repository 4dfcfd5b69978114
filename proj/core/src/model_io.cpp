#include "grounded/model_io.hpp"

#include <json.hpp>

namespace grounded {

namespace {

using nlohmann::json;

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  return v;
}

json feature_map_to_json(const EtaFeatureMap& map) {
  json j;
  j["kind"] = map.name();
  return j;
}

EtaFeatureMap feature_map_from_json(const json& j) {
  return EtaFeatureMap::parse(j.at("kind").get<std::string>());
}

json correction_to_json_obj(const Correction& c) {
  json j;
  j["theta"] = vector_to_json(c.theta);
  j["feature_map"] = feature_map_to_json(c.feature_map);
  j["condition_number"] = c.design_condition_number;
  j["n_used"] = c.n_used;
  return j;
}

Correction correction_from_json_obj(const json& j) {
  Correction c;
  c.theta = vector_from_json(j.at("theta"));
  c.feature_map = feature_map_from_json(j.at("feature_map"));
  c.design_condition_number = j.at("condition_number").get<double>();
  c.n_used = j.at("n_used").get<std::int64_t>();
  return c;
}

json regressor_to_json(const Regressor& reg) {
  if (const auto* ridge = dynamic_cast<const RidgeRegressor*>(&reg)) {
    json j;
    j["type"] = "ridge";
    j["coefficients"] = vector_to_json(ridge->model.coefficients);
    j["intercept"] = ridge->model.intercept;
    j["lambda_used"] = ridge->model.lambda_used;
    return j;
  }
  if (const auto* forest = dynamic_cast<const ForestRegressor*>(&reg)) {
    const ForestModel& m = forest->model;
    json j;
    j["type"] = "forest";
    j["params"] = {{"n_trees", m.params.n_trees}, {"min_leaf", m.params.min_leaf},
                   {"max_depth", m.params.max_depth}, {"mtry", m.params.mtry},
                   {"bootstrap", m.params.bootstrap}};
    j["input_dim"] = m.input_dim;
    json trees = json::array();
    for (const auto& tree : m.trees) {
      // Columnar node layout keeps large forests compact.
      json feature = json::array(), threshold = json::array(), left = json::array(),
           right = json::array(), value = json::array();
      for (const auto& node : tree.nodes) {
        feature.push_back(node.feature);
        threshold.push_back(node.threshold);
        left.push_back(node.left);
        right.push_back(node.right);
        value.push_back(node.value);
      }
      trees.push_back({{"feature", feature}, {"threshold", threshold}, {"left", left},
                       {"right", right}, {"value", value}});
    }
    j["trees"] = std::move(trees);
    return j;
  }
  throw ConfigError("model_to_json: unsupported regressor type");
}

std::unique_ptr<Regressor> regressor_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "ridge") {
    LinearModel m;
    m.coefficients = vector_from_json(j.at("coefficients"));
    m.intercept = j.at("intercept").get<double>();
    m.lambda_used = j.at("lambda_used").get<double>();
    return std::make_unique<RidgeRegressor>(std::move(m));
  }
  if (type == "forest") {
    ForestModel m;
    const json& p = j.at("params");
    m.params.n_trees = p.at("n_trees").get<int>();
    m.params.min_leaf = p.at("min_leaf").get<int>();
    m.params.max_depth = p.at("max_depth").get<int>();
    m.params.mtry = p.at("mtry").get<int>();
    m.params.bootstrap = p.at("bootstrap").get<bool>();
    m.input_dim = j.at("input_dim").get<Eigen::Index>();
    for (const auto& tj : j.at("trees")) {
      RegressionTree tree;
      const auto& feature = tj.at("feature");
      const auto& threshold = tj.at("threshold");
      const auto& left = tj.at("left");
      const auto& right = tj.at("right");
      const auto& value = tj.at("value");
      tree.nodes.resize(feature.size());
      for (std::size_t i = 0; i < feature.size(); ++i) {
        tree.nodes[i].feature = feature[i].get<std::int32_t>();
        tree.nodes[i].threshold = threshold[i].get<double>();
        tree.nodes[i].left = left[i].get<std::int32_t>();
        tree.nodes[i].right = right[i].get<std::int32_t>();
        tree.nodes[i].value = value[i].get<double>();
      }
      m.trees.push_back(std::move(tree));
    }
    return std::make_unique<ForestRegressor>(std::move(m));
  }
  throw ConfigError("model_from_json: unknown regressor type \"" + type + "\"");
}

json model_to_json_obj(const CateModel& model) {
  if (const auto* diff = dynamic_cast<const DiffRegressionModel*>(&model)) {
    json j;
    j["type"] = "difference_of_regressions";
    j["input_dim"] = diff->input_dim();
    j["treated"] = regressor_to_json(diff->treated());
    j["control"] = regressor_to_json(diff->control());
    return j;
  }
  if (const auto* direct = dynamic_cast<const DirectRegressionModel*>(&model)) {
    json j;
    j["type"] = "pseudo_outcome_regression";
    j["input_dim"] = direct->input_dim();
    j["regressor"] = regressor_to_json(direct->regressor());
    return j;
  }
  if (const auto* corrected = dynamic_cast<const CorrectedCateModel*>(&model)) {
    json j;
    j["type"] = "corrected_cate";
    j["omega"] = model_to_json_obj(corrected->omega());
    j["correction"] = correction_to_json_obj(corrected->correction());
    return j;
  }
  if (const auto* grid = dynamic_cast<const GridCateModel*>(&model)) {
    json j;
    j["type"] = "grid";
    j["grid"] = grid->grid();
    j["values"] = grid->values();
    return j;
  }
  throw ConfigError("model_to_json: unsupported model type");
}

std::unique_ptr<CateModel> model_from_json_obj(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "difference_of_regressions") {
    return std::make_unique<DiffRegressionModel>(regressor_from_json(j.at("treated")),
                                                 regressor_from_json(j.at("control")),
                                                 j.at("input_dim").get<Eigen::Index>());
  }
  if (type == "pseudo_outcome_regression") {
    return std::make_unique<DirectRegressionModel>(regressor_from_json(j.at("regressor")),
                                                   j.at("input_dim").get<Eigen::Index>());
  }
  if (type == "corrected_cate") {
    std::shared_ptr<const CateModel> omega = model_from_json_obj(j.at("omega"));
    return std::make_unique<CorrectedCateModel>(std::move(omega),
                                                correction_from_json_obj(j.at("correction")));
  }
  if (type == "grid") {
    return std::make_unique<GridCateModel>(j.at("grid").get<std::vector<double>>(),
                                           j.at("values").get<std::vector<double>>());
  }
  throw ConfigError("model_from_json: unknown model type \"" + type + "\"");
}

}  // namespace

std::string correction_to_json(const Correction& correction, int indent) {
  return correction_to_json_obj(correction).dump(indent);
}

Correction correction_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& err) {
    throw DataError(std::string("correction_from_json: ") + err.what());
  }
  try {
    return correction_from_json_obj(j);
  } catch (const json::exception& err) {
    throw DataError(std::string("correction_from_json: malformed document: ") + err.what());
  }
}

std::string model_to_json(const CateModel& model, int indent) {
  return model_to_json_obj(model).dump(indent);
}

std::unique_ptr<CateModel> model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& err) {
    throw DataError(std::string("model_from_json: ") + err.what());
  }
  try {
    return model_from_json_obj(j);
  } catch (const json::exception& err) {
    throw DataError(std::string("model_from_json: malformed document: ") + err.what());
  }
}

}  // namespace grounded
