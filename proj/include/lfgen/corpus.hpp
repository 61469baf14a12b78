#pragma once

// Intent-labeled query datasets: domain types, tokenization, bag-of-words
// vectorization and seeded stratified splitting.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lfgen/error.hpp"
#include "lfgen/random.hpp"

namespace lfgen {

struct EntitySpan {
  std::size_t start = 0;  // inclusive, byte offset
  std::size_t end = 0;    // exclusive
  std::string value;
  std::string entity_type;

  friend bool operator==(const EntitySpan&, const EntitySpan&) = default;
};

struct Query {
  std::string id;
  std::string text;
  std::optional<std::string> intent;
  std::vector<EntitySpan> entities;

  friend bool operator==(const Query&, const Query&) = default;
};

/// Checks span bounds, span values against the text, and span ordering.
inline void validate_query(const Query& q) {
  std::size_t prev_end = 0;
  for (std::size_t i = 0; i < q.entities.size(); ++i) {
    const auto& e = q.entities[i];
    if (e.start >= e.end || e.end > q.text.size())
      throw ValidationError("query " + q.id + ": entity span [" + std::to_string(e.start) + "," +
                            std::to_string(e.end) + ") out of bounds");
    if (q.text.compare(e.start, e.end - e.start, e.value) != 0)
      throw ValidationError("query " + q.id + ": entity value \"" + e.value +
                            "\" does not match text");
    if (e.entity_type.empty())
      throw ValidationError("query " + q.id + ": entity without a type");
    if (i > 0 && e.start < prev_end)
      throw ValidationError("query " + q.id + ": overlapping or unsorted entity spans");
    prev_end = e.end;
  }
}

/// Canonical id for the n-th (0-based) query of a source without ids.
inline std::string canonical_id(std::size_t ordinal) {
  std::string digits = std::to_string(ordinal + 1);
  if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
  return "q" + digits;
}

class Dataset {
 public:
  Dataset() = default;

  explicit Dataset(std::vector<Query> queries) : queries_(std::move(queries)) {
    std::unordered_set<std::string> seen;
    for (const auto& q : queries_) {
      if (!seen.insert(q.id).second) throw ValidationError("duplicate query id: " + q.id);
      validate_query(q);
      if (q.intent) intents_.insert(*q.intent);
    }
  }

  const std::vector<Query>& queries() const noexcept { return queries_; }
  const std::set<std::string>& intents() const noexcept { return intents_; }
  std::size_t size() const noexcept { return queries_.size(); }
  bool empty() const noexcept { return queries_.empty(); }
  const Query& operator[](std::size_t i) const { return queries_[i]; }

  auto begin() const noexcept { return queries_.begin(); }
  auto end() const noexcept { return queries_.end(); }

  bool fully_labeled() const {
    return std::all_of(queries_.begin(), queries_.end(),
                       [](const Query& q) { return q.intent.has_value(); });
  }

  /// Same queries with every intent removed.
  Dataset without_intents() const {
    std::vector<Query> out = queries_;
    for (auto& q : out) q.intent.reset();
    return Dataset(std::move(out));
  }

  friend bool operator==(const Dataset& a, const Dataset& b) { return a.queries_ == b.queries_; }

 private:
  std::vector<Query> queries_;
  std::set<std::string> intents_;
};

/// Lowercases and splits on every non-alphanumeric byte. Empty tokens are
/// dropped; order and duplicates are kept.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

/// Sparse token counts keyed by vocabulary column.
using CountVector = std::map<std::size_t, std::size_t>;

class Vocabulary {
 public:
  Vocabulary() = default;

  explicit Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    std::sort(tokens_.begin(), tokens_.end());
    tokens_.erase(std::unique(tokens_.begin(), tokens_.end()), tokens_.end());
    for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], i);
  }

  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  std::size_t size() const noexcept { return tokens_.size(); }

  std::optional<std::size_t> find(const std::string& token) const {
    auto it = index_.find(token);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline Vocabulary build_vocabulary(const Dataset& dataset) {
  if (dataset.empty()) throw ValidationError("cannot build a vocabulary from an empty dataset");
  std::vector<std::string> all;
  for (const auto& q : dataset) {
    auto toks = tokenize(q.text);
    all.insert(all.end(), std::make_move_iterator(toks.begin()),
               std::make_move_iterator(toks.end()));
  }
  return Vocabulary(std::move(all));
}

/// Out-of-vocabulary tokens are ignored.
inline CountVector vectorize(std::string_view text, const Vocabulary& vocab) {
  CountVector counts;
  for (const auto& tok : tokenize(text))
    if (auto col = vocab.find(tok)) ++counts[*col];
  return counts;
}

inline CountVector vectorize(const Query& query, const Vocabulary& vocab) {
  return vectorize(query.text, vocab);
}

/// Part sizes for n items: floor of n*ratio, then one extra item to each
/// part in ratio order until the total reaches n.
inline std::vector<std::size_t> split_sizes(std::size_t n, std::span<const double> ratios) {
  std::vector<std::size_t> sizes;
  std::size_t used = 0;
  for (double r : ratios) {
    auto s = static_cast<std::size_t>(std::floor(static_cast<double>(n) * r + 1e-9));
    sizes.push_back(s);
    used += s;
  }
  for (std::size_t i = 0; used < n; i = (i + 1) % sizes.size(), ++used) ++sizes[i];
  return sizes;
}

inline void check_ratios(std::span<const double> ratios) {
  if (ratios.empty()) throw ValidationError("no split ratios given");
  double sum = 0;
  for (double r : ratios) {
    if (!(r > 0)) throw ValidationError("split ratios must be positive");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("split ratios must sum to 1");
}

/// Disjoint seeded partition. Intents with at least three queries are
/// stratified; the rest are assigned at random to fill the global sizes.
/// Each part keeps the input order of its queries.
inline std::vector<Dataset> split_by_ratios(const Dataset& dataset, std::span<const double> ratios,
                                            std::uint64_t seed) {
  check_ratios(ratios);
  const std::size_t parts = ratios.size();
  const auto targets = split_sizes(dataset.size(), ratios);
  Rng rng(seed);

  std::map<std::string, std::vector<std::size_t>> by_intent;
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& intent = dataset[i].intent;
    if (intent)
      by_intent[*intent].push_back(i);
    else
      pool.push_back(i);
  }

  std::vector<std::size_t> assignment(dataset.size(), parts);
  std::vector<std::size_t> filled(parts, 0);
  for (auto& [intent, members] : by_intent) {
    if (members.size() < 3) {
      pool.insert(pool.end(), members.begin(), members.end());
      continue;
    }
    rng.shuffle(std::span(members));
    std::size_t pos = 0;
    for (std::size_t p = 0; p < parts; ++p) {
      auto take = static_cast<std::size_t>(
          std::floor(static_cast<double>(members.size()) * ratios[p] + 1e-9));
      for (std::size_t k = 0; k < take; ++k) assignment[members[pos++]] = p;
      filled[p] += take;
    }
    pool.insert(pool.end(), members.begin() + static_cast<std::ptrdiff_t>(pos), members.end());
  }

  std::sort(pool.begin(), pool.end());
  rng.shuffle(std::span(pool));
  std::size_t p = 0;
  for (std::size_t idx : pool) {
    while (filled[p] >= targets[p]) ++p;
    assignment[idx] = p;
    ++filled[p];
  }

  std::vector<std::vector<Query>> out(parts);
  for (std::size_t i = 0; i < dataset.size(); ++i) out[assignment[i]].push_back(dataset[i]);
  std::vector<Dataset> result;
  result.reserve(parts);
  for (auto& qs : out) result.emplace_back(std::move(qs));
  return result;
}

inline std::array<Dataset, 3> split_dataset(const Dataset& dataset, std::array<double, 3> ratios,
                                            std::uint64_t seed) {
  auto parts = split_by_ratios(dataset, ratios, seed);
  return {std::move(parts[0]), std::move(parts[1]), std::move(parts[2])};
}

/// Queries of `a` followed by queries of `b`.
inline Dataset concat(const Dataset& a, const Dataset& b) {
  std::vector<Query> qs = a.queries();
  qs.insert(qs.end(), b.begin(), b.end());
  return Dataset(std::move(qs));
}

}  // namespace lfgen
