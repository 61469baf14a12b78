#pragma once

#include <algorithm>
#include <numeric>

#include "lfgen/ml/classifier.hpp"

namespace lfgen::ml {

/// k nearest neighbours under cosine distance. Neighbours are ordered by
/// (distance, training index); a vote tie goes to the tied class whose
/// nearest member comes first in that order.
class KNearestNeighbors final : public Classifier {
 public:
  KNearestNeighbors() = default;

  static KNearestNeighbors fit(const TrainingSet& data, std::size_t k = 5) {
    data.check();
    if (k == 0) throw ValidationError("k must be positive");
    KNearestNeighbors m;
    m.k_ = k;
    m.classes_ = data.classes;
    m.rows_ = data.rows;
    m.labels_ = data.labels;
    m.index_norms();
    return m;
  }

  std::string kind() const override { return "k_nearest_neighbors"; }

  std::size_t predict(const SparseRow& row) const override {
    const double qn = std::sqrt(squared_norm(row));
    std::vector<std::pair<double, std::size_t>> dist(rows_.size());
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      double sim = (qn == 0 || norms_[i] == 0) ? 0.0 : sparse_dot(row, rows_[i]) / (qn * norms_[i]);
      dist[i] = {1.0 - sim, i};
    }
    const std::size_t k = std::min(k_, dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::vector<double> votes(classes_, 0.0);
    std::vector<std::size_t> first_seen(classes_, k);
    for (std::size_t r = 0; r < k; ++r) {
      auto c = labels_[dist[r].second];
      votes[c] += 1;
      first_seen[c] = std::min(first_seen[c], r);
    }
    std::size_t best = labels_[dist[0].second];
    for (std::size_t c = 0; c < classes_; ++c)
      if (votes[c] > votes[best] || (votes[c] == votes[best] && first_seen[c] < first_seen[best]))
        best = c;
    return best;
  }

  nlohmann::json to_json() const override {
    auto rows = nlohmann::json::array();
    for (const auto& r : rows_) rows.push_back(row_to_json(r));
    return {{"kind", kind()}, {"k", k_}, {"classes", classes_}, {"rows", rows}, {"labels", labels_}};
  }

  static KNearestNeighbors from_json(const nlohmann::json& j) {
    KNearestNeighbors m;
    m.k_ = j.at("k").get<std::size_t>();
    m.classes_ = j.at("classes").get<std::size_t>();
    for (const auto& r : j.at("rows")) m.rows_.push_back(row_from_json(r));
    m.labels_ = j.at("labels").get<std::vector<std::size_t>>();
    m.index_norms();
    return m;
  }

 private:
  void index_norms() {
    norms_.clear();
    for (const auto& r : rows_) norms_.push_back(std::sqrt(squared_norm(r)));
  }

  std::size_t k_ = 5;
  std::size_t classes_ = 0;
  std::vector<SparseRow> rows_;
  std::vector<std::size_t> labels_;
  std::vector<double> norms_;
};

}  // namespace lfgen::ml
