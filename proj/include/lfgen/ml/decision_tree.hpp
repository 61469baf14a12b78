#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>

#include "lfgen/ml/classifier.hpp"
#include "lfgen/random.hpp"

namespace lfgen::ml {

struct TreeOptions {
  std::size_t max_depth = 16;
  std::size_t min_leaf = 1;
  /// Features examined per node; 0 means all of them.
  std::size_t max_features = 0;
};

/// CART tree with Gini impurity. Splits send `value <= threshold` left.
class DecisionTree final : public Classifier {
 public:
  struct Node {
    std::int64_t feature = -1;  // -1 marks a leaf
    double threshold = 0;
    std::size_t left = 0;
    std::size_t right = 0;
    std::size_t label = 0;
  };

  DecisionTree() = default;

  /// `sample` lists training rows (repeats allowed, as with bootstrapping).
  static DecisionTree fit(const TrainingSet& data, const std::vector<std::size_t>& sample,
                          TreeOptions options, std::uint64_t seed) {
    data.check();
    DecisionTree tree;
    Builder b{data, options, Rng(seed), tree.nodes_, {}};
    b.dense.assign(data.size(), std::vector<double>(data.dimension, 0.0));
    for (std::size_t i = 0; i < data.size(); ++i)
      for (const auto& [c, v] : data.rows[i]) b.dense[i][c] = v;
    std::vector<std::size_t> idx = sample;
    b.build(idx, 0);
    return tree;
  }

  static DecisionTree fit(const TrainingSet& data, TreeOptions options = {}, std::uint64_t seed = 0) {
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), 0);
    return fit(data, all, options, seed);
  }

  std::string kind() const override { return "decision_tree"; }

  std::size_t predict(const SparseRow& row) const override {
    std::size_t n = 0;
    while (nodes_[n].feature >= 0) {
      auto f = static_cast<std::size_t>(nodes_[n].feature);
      auto it = std::lower_bound(row.begin(), row.end(), std::make_pair(f, -1e308));
      double v = (it != row.end() && it->first == f) ? it->second : 0.0;
      n = v <= nodes_[n].threshold ? nodes_[n].left : nodes_[n].right;
    }
    return nodes_[n].label;
  }

  const std::vector<Node>& nodes() const noexcept { return nodes_; }

  nlohmann::json to_json() const override {
    auto arr = nlohmann::json::array();
    for (const auto& n : nodes_) arr.push_back({n.feature, n.threshold, n.left, n.right, n.label});
    return {{"kind", kind()}, {"nodes", arr}};
  }

  static DecisionTree from_json(const nlohmann::json& j) {
    DecisionTree t;
    for (const auto& n : j.at("nodes"))
      t.nodes_.push_back({n.at(0).get<std::int64_t>(), n.at(1).get<double>(),
                          n.at(2).get<std::size_t>(), n.at(3).get<std::size_t>(),
                          n.at(4).get<std::size_t>()});
    if (t.nodes_.empty()) throw ValidationError("decision tree without nodes");
    return t;
  }

 private:
  struct Builder {
    const TrainingSet& data;
    TreeOptions options;
    Rng rng;
    std::vector<Node>& nodes;
    std::vector<std::vector<double>> dense;

    std::vector<double> class_counts(const std::vector<std::size_t>& idx) const {
      std::vector<double> counts(data.classes, 0.0);
      for (auto i : idx) counts[data.labels[i]] += 1;
      return counts;
    }

    static double gini(const std::vector<double>& counts, double total) {
      if (total <= 0) return 0;
      double s = 0;
      for (double c : counts) s += c * c;
      return 1.0 - s / (total * total);
    }

    std::size_t build(std::vector<std::size_t>& idx, std::size_t depth) {
      const std::size_t me = nodes.size();
      nodes.push_back({});
      auto counts = class_counts(idx);
      nodes[me].label = argmax(counts);
      const double total = static_cast<double>(idx.size());
      const double parent = gini(counts, total);
      if (depth >= options.max_depth || parent == 0 || idx.size() < 2 * options.min_leaf)
        return me;

      // Only features that are nonzero somewhere in this node can split it.
      std::set<std::size_t> present;
      for (auto i : idx)
        for (const auto& [c, v] : data.rows[i])
          if (v != 0) present.insert(c);
      std::vector<std::size_t> candidates;
      if (options.max_features == 0 || options.max_features >= data.dimension) {
        candidates.assign(present.begin(), present.end());
      } else {
        // Draw features without replacement until max_features of them can
        // split this node; constant features are skipped without counting.
        std::vector<std::size_t> all(data.dimension);
        std::iota(all.begin(), all.end(), 0);
        for (std::size_t k = 0; k < all.size() && candidates.size() < options.max_features; ++k) {
          auto j = k + static_cast<std::size_t>(rng.below(all.size() - k));
          std::swap(all[k], all[j]);
          if (present.count(all[k])) candidates.push_back(all[k]);
        }
      }

      double best_score = parent - 1e-12;
      std::optional<std::pair<std::size_t, double>> best;
      std::vector<std::pair<double, std::size_t>> values(idx.size());
      for (auto f : candidates) {
        for (std::size_t k = 0; k < idx.size(); ++k) values[k] = {dense[idx[k]][f], data.labels[idx[k]]};
        std::sort(values.begin(), values.end());
        std::vector<double> left(data.classes, 0.0);
        std::vector<double> right = counts;
        for (std::size_t k = 0; k + 1 < values.size(); ++k) {
          left[values[k].second] += 1;
          right[values[k].second] -= 1;
          if (values[k].first == values[k + 1].first) continue;
          const double nl = static_cast<double>(k + 1);
          const double nr = total - nl;
          if (nl < static_cast<double>(options.min_leaf) || nr < static_cast<double>(options.min_leaf))
            continue;
          double score = (nl * gini(left, nl) + nr * gini(right, nr)) / total;
          if (score < best_score) {
            best_score = score;
            best = {f, 0.5 * (values[k].first + values[k + 1].first)};
          }
        }
      }
      if (!best) return me;

      std::vector<std::size_t> l, r;
      for (auto i : idx) (dense[i][best->first] <= best->second ? l : r).push_back(i);
      idx.clear();
      idx.shrink_to_fit();
      nodes[me].feature = static_cast<std::int64_t>(best->first);
      nodes[me].threshold = best->second;
      auto left_node = build(l, depth + 1);
      auto right_node = build(r, depth + 1);
      nodes[me].left = left_node;
      nodes[me].right = right_node;
      return me;
    }
  };

  std::vector<Node> nodes_;
};

}  // namespace lfgen::ml
