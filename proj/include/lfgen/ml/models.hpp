#pragma once

#include "lfgen/ml/decision_tree.hpp"
#include "lfgen/ml/knn.hpp"
#include "lfgen/ml/linear.hpp"
#include "lfgen/ml/random_forest.hpp"

namespace lfgen::ml {

inline std::unique_ptr<Classifier> classifier_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "decision_tree") return std::make_unique<DecisionTree>(DecisionTree::from_json(j));
  if (kind == "random_forest") return std::make_unique<RandomForest>(RandomForest::from_json(j));
  if (kind == "k_nearest_neighbors")
    return std::make_unique<KNearestNeighbors>(KNearestNeighbors::from_json(j));
  if (kind == "logistic_regression" || kind == "linear_svm")
    return std::make_unique<LinearModel>(LinearModel::from_json(j));
  throw ValidationError("unknown classifier kind: " + kind);
}

}  // namespace lfgen::ml
