#pragma once

#include <memory>
#include <string>

#include "grounded/grounding.hpp"

namespace grounded {

// JSON round-trip for fitted models. Doubles are written shortest-round-trip,
// so a reloaded model predicts bit-identically. Supported concrete types:
// DiffRegressionModel, DirectRegressionModel, CorrectedCateModel, GridCateModel
// over ridge or forest regressors.
std::string correction_to_json(const Correction& correction, int indent = 2);
Correction correction_from_json(const std::string& text);

std::string model_to_json(const CateModel& model, int indent = 2);
std::unique_ptr<CateModel> model_from_json(const std::string& text);

}  // namespace grounded
