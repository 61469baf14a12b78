#pragma once

// Small multiclass classifiers over sparse bag-of-words rows. Everything is
// deterministic given the seed passed at construction.

#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lfgen/error.hpp"

namespace lfgen::ml {

/// (column, value) pairs sorted by column.
using SparseRow = std::vector<std::pair<std::size_t, double>>;

struct TrainingSet {
  std::vector<SparseRow> rows;
  std::vector<std::size_t> labels;  // class index per row
  std::size_t dimension = 0;
  std::size_t classes = 0;

  std::size_t size() const noexcept { return rows.size(); }

  void check() const {
    if (rows.size() != labels.size()) throw ValidationError("rows and labels differ in length");
    if (rows.empty()) throw ValidationError("empty training set");
    for (auto y : labels)
      if (y >= classes) throw ValidationError("label index out of range");
  }
};

inline double dot(const SparseRow& row, const std::vector<double>& dense) {
  double s = 0;
  for (const auto& [col, v] : row) s += v * dense[col];
  return s;
}

inline double squared_norm(const SparseRow& row) {
  double s = 0;
  for (const auto& [col, v] : row) s += v * v;
  return s;
}

inline double sparse_dot(const SparseRow& a, const SparseRow& b) {
  double s = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (i->first < j->first)
      ++i;
    else if (j->first < i->first)
      ++j;
    else
      s += (i++)->second * (j++)->second;
  }
  return s;
}

/// Index of the largest count; the lowest index wins ties.
inline std::size_t argmax(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

inline nlohmann::json row_to_json(const SparseRow& row) {
  auto j = nlohmann::json::array();
  for (const auto& [c, v] : row) j.push_back({c, v});
  return j;
}

inline SparseRow row_from_json(const nlohmann::json& j) {
  SparseRow row;
  for (const auto& cell : j) row.emplace_back(cell.at(0).get<std::size_t>(), cell.at(1).get<double>());
  return row;
}

class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::string kind() const = 0;
  virtual std::size_t predict(const SparseRow& row) const = 0;
  virtual nlohmann::json to_json() const = 0;
};

}  // namespace lfgen::ml
