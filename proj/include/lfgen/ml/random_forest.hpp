#pragma once

#include <cmath>

#include "lfgen/ml/decision_tree.hpp"

namespace lfgen::ml {

struct ForestOptions {
  std::size_t trees = 25;
  TreeOptions tree{};  // max_features 0 here means floor(sqrt(dimension))
};

/// Bagged CART trees with per-node feature subsampling; plurality vote.
class RandomForest final : public Classifier {
 public:
  RandomForest() = default;

  static RandomForest fit(const TrainingSet& data, ForestOptions options = {},
                          std::uint64_t seed = 0) {
    data.check();
    RandomForest forest;
    forest.classes_ = data.classes;
    TreeOptions tree_options = options.tree;
    if (tree_options.max_features == 0)
      tree_options.max_features = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(data.dimension)))));
    Rng rng(seed);
    for (std::size_t t = 0; t < options.trees; ++t) {
      std::vector<std::size_t> bootstrap(data.size());
      for (auto& i : bootstrap) i = static_cast<std::size_t>(rng.below(data.size()));
      forest.trees_.push_back(DecisionTree::fit(data, bootstrap, tree_options, rng.next()));
    }
    return forest;
  }

  std::string kind() const override { return "random_forest"; }

  std::size_t predict(const SparseRow& row) const override {
    std::vector<double> votes(classes_, 0.0);
    for (const auto& t : trees_) votes[t.predict(row)] += 1;
    return argmax(votes);
  }

  nlohmann::json to_json() const override {
    auto arr = nlohmann::json::array();
    for (const auto& t : trees_) arr.push_back(t.to_json());
    return {{"kind", kind()}, {"classes", classes_}, {"trees", arr}};
  }

  static RandomForest from_json(const nlohmann::json& j) {
    RandomForest f;
    f.classes_ = j.at("classes").get<std::size_t>();
    for (const auto& t : j.at("trees")) f.trees_.push_back(DecisionTree::from_json(t));
    return f;
  }

 private:
  std::size_t classes_ = 0;
  std::vector<DecisionTree> trees_;
};

}  // namespace lfgen::ml
