#pragma once

// Applying LFs, majority label voting, LF quality scoring and pruning.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lfgen/corpus.hpp"
#include "lfgen/corpus_io.hpp"
#include "lfgen/labeling_function.hpp"
#include "lfgen/metrics.hpp"
#include "lfgen/parallel.hpp"

namespace lfgen {

/// Votes of each LF (column) on each query (row). Cells hold an index into
/// `intents`, or kAbstain.
struct LabelMatrix {
  static constexpr std::int32_t kAbstain = -1;

  std::vector<std::string> rows;     // query ids
  std::vector<std::string> cols;     // lf names
  std::vector<std::string> intents;  // sorted
  std::vector<std::int32_t> cells;   // row-major

  std::int32_t at(std::size_t row, std::size_t col) const { return cells[row * cols.size() + col]; }

  std::optional<std::string> vote(std::size_t row, std::size_t col) const {
    auto c = at(row, col);
    if (c == kAbstain) return std::nullopt;
    return intents[static_cast<std::size_t>(c)];
  }

  /// Builds a matrix from explicit votes; intents are collected from them.
  static LabelMatrix from_votes(std::vector<std::string> rows, std::vector<std::string> cols,
                                const std::vector<std::vector<std::optional<std::string>>>& votes) {
    LabelMatrix m;
    m.rows = std::move(rows);
    m.cols = std::move(cols);
    std::set<std::string> names;
    for (const auto& r : votes)
      for (const auto& v : r)
        if (v) names.insert(*v);
    m.intents.assign(names.begin(), names.end());
    m.cells.reserve(m.rows.size() * m.cols.size());
    for (const auto& r : votes) {
      if (r.size() != m.cols.size()) throw ValidationError("ragged vote matrix");
      for (const auto& v : r)
        m.cells.push_back(v ? static_cast<std::int32_t>(
                                  std::lower_bound(m.intents.begin(), m.intents.end(), *v) -
                                  m.intents.begin())
                            : kAbstain);
    }
    return m;
  }
};

inline LabelMatrix apply_lfs(const std::vector<LabelingFunction>& lfs, const Dataset& queries,
                             unsigned threads = 1) {
  if (lfs.empty()) throw ValidationError("no labeling functions to apply");
  std::vector<QueryView> views;
  views.reserve(queries.size());
  for (const auto& q : queries) views.emplace_back(q);

  std::vector<std::vector<std::optional<std::string>>> columns(lfs.size());
  parallel_for(lfs.size(), threads, [&](std::size_t c) {
    columns[c].reserve(views.size());
    for (const auto& v : views) columns[c].push_back(lfs[c].vote(v));
  });

  std::vector<std::vector<std::optional<std::string>>> votes(queries.size(),
                                                              std::vector<std::optional<std::string>>(lfs.size()));
  for (std::size_t c = 0; c < lfs.size(); ++c)
    for (std::size_t r = 0; r < queries.size(); ++r) votes[r][c] = std::move(columns[c][r]);
  std::vector<std::string> rows, cols;
  for (const auto& q : queries) rows.push_back(q.id);
  for (const auto& lf : lfs) cols.push_back(lf.name);
  return LabelMatrix::from_votes(std::move(rows), std::move(cols), votes);
}

/// Plurality of non-abstaining votes per row; no votes or a tied plurality
/// yields nullopt (abstain).
inline std::vector<std::optional<std::string>> majority_vote(const LabelMatrix& m) {
  std::vector<std::optional<std::string>> out(m.rows.size());
  std::vector<std::size_t> counts(m.intents.size());
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t c = 0; c < m.cols.size(); ++c)
      if (auto v = m.at(r, c); v != LabelMatrix::kAbstain) ++counts[static_cast<std::size_t>(v)];
    std::size_t best = 0, best_count = 0;
    bool tied = false;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i] > best_count) {
        best = i;
        best_count = counts[i];
        tied = false;
      } else if (counts[i] == best_count && best_count > 0) {
        tied = true;
      }
    }
    if (best_count > 0 && !tied) out[r] = m.intents[best];
  }
  return out;
}

/// Fraction of each row's non-abstaining votes going to each of `intents`;
/// all zeros for rows without votes.
inline ScoreTable vote_fractions(const LabelMatrix& m, std::vector<std::string> intents) {
  ScoreTable t{std::move(intents), {}};
  std::vector<std::optional<std::size_t>> column_of(m.intents.size());
  for (std::size_t i = 0; i < m.intents.size(); ++i) column_of[i] = t.column(m.intents[i]);
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    std::vector<double> row(t.intents.size(), 0.0);
    double votes = 0;
    for (std::size_t c = 0; c < m.cols.size(); ++c) {
      auto v = m.at(r, c);
      if (v == LabelMatrix::kAbstain) continue;
      votes += 1;
      if (auto col = column_of[static_cast<std::size_t>(v)]) row[*col] += 1;
    }
    if (votes > 0)
      for (double& x : row) x /= votes;
    t.rows.push_back(std::move(row));
  }
  return t;
}

struct LFQuality {
  std::string lf_name;
  LfType lf_type = LfType::contains_word;
  double coverage = 0;
  double accuracy = 0;  // weighted F1 over the rows the LF labels
  std::size_t lf_support = 0;
};

inline LFQuality score_lf(const LabelingFunction& lf, const Dataset& holdout) {
  if (holdout.empty()) throw ValidationError("cannot score an LF on an empty holdout");
  if (!holdout.fully_labeled()) throw ValidationError("holdout must be fully labeled");
  std::vector<std::string> gold;
  std::vector<std::optional<std::string>> predicted;
  for (const auto& q : holdout) {
    if (auto v = lf.vote(q)) {
      gold.push_back(*q.intent);
      predicted.push_back(std::move(v));
    }
  }
  LFQuality quality{lf.name, lf.type, 0.0, 0.0, lf.support};
  quality.coverage = static_cast<double>(gold.size()) / static_cast<double>(holdout.size());
  if (!gold.empty()) quality.accuracy = classification_report(gold, predicted).weighted_f1;
  return quality;
}

inline std::vector<LFQuality> score_lfs(const std::vector<LabelingFunction>& lfs, const Dataset& holdout,
                                        unsigned threads = 1) {
  std::vector<LFQuality> out(lfs.size());
  parallel_for(lfs.size(), threads, [&](std::size_t i) { out[i] = score_lf(lfs[i], holdout); });
  return out;
}

/// Keeps, per intent, the best targeted LF (accuracy, then coverage, then
/// name), and from the rest every LF with accuracy >= threshold, nonzero
/// coverage and support >= 2. ML LFs only take the second route. Output
/// keeps input order.
inline std::vector<LabelingFunction> prune(const std::vector<LabelingFunction>& lfs,
                                           const std::vector<LFQuality>& qualities,
                                           double accuracy_threshold) {
  if (!(accuracy_threshold > 0 && accuracy_threshold <= 1))
    throw ValidationError("pruner threshold must be in (0, 1]");
  if (lfs.size() != qualities.size()) throw ValidationError("one quality record per LF required");

  std::map<std::string, std::size_t> best;
  auto better = [&](std::size_t a, std::size_t b) {
    const auto& qa = qualities[a];
    const auto& qb = qualities[b];
    if (qa.accuracy != qb.accuracy) return qa.accuracy > qb.accuracy;
    if (qa.coverage != qb.coverage) return qa.coverage > qb.coverage;
    return lfs[a].name < lfs[b].name;
  };
  for (std::size_t i = 0; i < lfs.size(); ++i) {
    if (lfs[i].type == LfType::ml || !lfs[i].class_intent) continue;
    auto [it, inserted] = best.emplace(*lfs[i].class_intent, i);
    if (!inserted && better(i, it->second)) it->second = i;
  }
  std::vector<bool> keep(lfs.size(), false);
  for (const auto& [intent, i] : best) keep[i] = true;
  for (std::size_t i = 0; i < lfs.size(); ++i) {
    const auto& q = qualities[i];
    if (q.accuracy >= accuracy_threshold && q.coverage > 0 && q.lf_support >= 2) keep[i] = true;
  }
  std::vector<LabelingFunction> out;
  for (std::size_t i = 0; i < lfs.size(); ++i)
    if (keep[i]) out.push_back(lfs[i]);
  return out;
}

/// Pruned-LF report entries: lf_name, lf_type, coverage, accuracy, lf_support.
inline nlohmann::ordered_json qualities_to_json(const std::vector<LFQuality>& qualities) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& q : qualities)
    arr.push_back({{"lf_name", q.lf_name},
                   {"lf_type", to_string(q.lf_type)},
                   {"coverage", q.coverage},
                   {"accuracy", q.accuracy},
                   {"lf_support", q.lf_support}});
  return arr;
}

/// Quality records of the LFs named in `kept`, in the order of `kept`.
inline std::vector<LFQuality> select_qualities(const std::vector<LabelingFunction>& kept,
                                               const std::vector<LFQuality>& all) {
  std::map<std::string, const LFQuality*> by_name;
  for (const auto& q : all) by_name[q.lf_name] = &q;
  std::vector<LFQuality> out;
  for (const auto& lf : kept) out.push_back(*by_name.at(lf.name));
  return out;
}

struct LabeledQuery {
  Query query;                       // intent replaced by the assigned label
  std::map<std::string, double> votes;  // intent → vote fraction
};

/// Labels `queries` with `lfs` via majority vote.
inline std::vector<LabeledQuery> label_queries(const std::vector<LabelingFunction>& lfs,
                                               const Dataset& queries, unsigned threads = 1) {
  const auto matrix = apply_lfs(lfs, queries, threads);
  const auto assigned = majority_vote(matrix);
  const auto fractions = vote_fractions(matrix, matrix.intents);
  std::vector<LabeledQuery> out;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    LabeledQuery lq{queries[i], {}};
    lq.query.intent = assigned[i];
    for (std::size_t c = 0; c < fractions.intents.size(); ++c)
      if (fractions.rows[i][c] > 0) lq.votes[fractions.intents[c]] = fractions.rows[i][c];
    out.push_back(std::move(lq));
  }
  return out;
}

/// One JSON object per line: id, text, intent (null when abstained), votes,
/// entities.
inline void write_labels_jsonl(std::ostream& out, const std::vector<LabeledQuery>& labels) {
  for (const auto& l : labels) {
    nlohmann::ordered_json j;
    j["id"] = l.query.id;
    j["text"] = l.query.text;
    j["intent"] = l.query.intent ? nlohmann::ordered_json(*l.query.intent) : nlohmann::ordered_json(nullptr);
    auto votes = nlohmann::ordered_json::object();
    for (const auto& [k, v] : l.votes) votes[k] = v;
    j["votes"] = votes;
    j["entities"] = entities_to_json(l.query.entities);
    out << j.dump() << '\n';
  }
}

}  // namespace lfgen
