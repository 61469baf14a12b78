#pragma once

// Classification metrics for intent labeling: per-intent precision, recall
// and F1, support-weighted F1, one-vs-rest ROC AUC and Pearson correlation.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include "lfgen/error.hpp"

namespace lfgen {

/// Per-query scores for a fixed, ordered list of intents.
struct ScoreTable {
  std::vector<std::string> intents;
  std::vector<std::vector<double>> rows;  // rows[query][intent]

  std::optional<std::size_t> column(const std::string& intent) const {
    auto it = std::find(intents.begin(), intents.end(), intent);
    if (it == intents.end()) return std::nullopt;
    return static_cast<std::size_t>(it - intents.begin());
  }
};

enum class AucAveraging { macro, weighted };

struct IntentMetrics {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::size_t support = 0;
};

struct ClassificationReport {
  std::map<std::string, IntentMetrics> per_intent;
  double weighted_f1 = 0;
  std::optional<double> auc_ovr;  // absent when gold has a single intent or no scores
  std::size_t abstained = 0;
  std::size_t total = 0;
};

/// Midranks (1-based) of `values`; tied values share their average rank.
inline std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

/// Mann-Whitney AUC: probability a positive outscores a negative, ties
/// counting one half.
inline double binary_auc(const std::vector<bool>& positive, std::span<const double> scores) {
  if (positive.size() != scores.size()) throw ValidationError("labels and scores differ in length");
  const auto ranks = midranks(scores);
  double rank_sum = 0;
  double n_pos = 0;
  for (std::size_t i = 0; i < positive.size(); ++i) {
    if (positive[i]) {
      rank_sum += ranks[i];
      n_pos += 1;
    }
  }
  const double n_neg = static_cast<double>(positive.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) throw ValidationError("AUC needs both positives and negatives");
  return (rank_sum - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg);
}

/// One-vs-rest AUC averaged over the intents present in `gold`.
inline double auc_ovr(std::span<const std::string> gold, const ScoreTable& scores,
                      AucAveraging averaging = AucAveraging::macro) {
  if (gold.size() != scores.rows.size()) throw ValidationError("gold and scores differ in length");
  std::map<std::string, std::size_t> support;
  for (const auto& g : gold) ++support[g];
  if (support.size() < 2) throw ValidationError("AUC needs at least two gold intents");
  double sum = 0, weight_sum = 0;
  std::vector<bool> positive(gold.size());
  std::vector<double> column(gold.size());
  for (const auto& [intent, n] : support) {
    const auto col = scores.column(intent);
    for (std::size_t i = 0; i < gold.size(); ++i) {
      positive[i] = gold[i] == intent;
      column[i] = col ? scores.rows[i][*col] : 0.0;
    }
    const double auc = binary_auc(positive, column);
    const double w = averaging == AucAveraging::macro ? 1.0 : static_cast<double>(n);
    sum += w * auc;
    weight_sum += w;
  }
  return sum / weight_sum;
}

/// Hard-label scores: 1 for the predicted intent, 0 elsewhere.
inline ScoreTable indicator_scores(std::span<const std::optional<std::string>> predicted,
                                   std::vector<std::string> intents) {
  ScoreTable t{std::move(intents), {}};
  for (const auto& p : predicted) {
    std::vector<double> row(t.intents.size(), 0.0);
    if (p)
      if (auto c = t.column(*p)) row[*c] = 1.0;
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Abstentions (nullopt) count against recall and never enter a precision
/// denominator.
inline ClassificationReport classification_report(std::span<const std::string> gold,
                                                  std::span<const std::optional<std::string>> predicted,
                                                  const ScoreTable* scores = nullptr,
                                                  AucAveraging averaging = AucAveraging::macro) {
  if (gold.empty()) throw ValidationError("classification report needs at least one query");
  if (gold.size() != predicted.size())
    throw ValidationError("gold and predictions differ in length");
  ClassificationReport report;
  report.total = gold.size();
  std::map<std::string, std::size_t> tp, predicted_count;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    report.per_intent[gold[i]].support += 1;
    if (!predicted[i]) {
      ++report.abstained;
      continue;
    }
    report.per_intent[*predicted[i]];
    ++predicted_count[*predicted[i]];
    if (*predicted[i] == gold[i]) ++tp[gold[i]];
  }
  double weighted = 0;
  for (auto& [intent, m] : report.per_intent) {
    const double t = static_cast<double>(tp[intent]);
    const double pc = static_cast<double>(predicted_count[intent]);
    m.precision = pc > 0 ? t / pc : 0.0;
    m.recall = m.support > 0 ? t / static_cast<double>(m.support) : 0.0;
    m.f1 = (m.precision + m.recall) > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    weighted += m.f1 * static_cast<double>(m.support);
  }
  report.weighted_f1 = weighted / static_cast<double>(gold.size());
  std::map<std::string, int> distinct;
  for (const auto& g : gold) distinct[g];
  if (scores && distinct.size() >= 2) report.auc_ovr = auc_ovr(gold, *scores, averaging);
  return report;
}

struct Correlation {
  double r = 0;
  double p = 1;
};

/// Pearson product-moment correlation with a two-sided t-test p-value.
inline Correlation pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("pearson inputs differ in length");
  if (x.size() < 3) throw ValidationError("pearson needs at least three points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) throw ValidationError("pearson needs nonzero variance in both inputs");
  Correlation c;
  c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double dof = n - 2;
  if (std::abs(c.r) >= 1.0) {
    c.p = 0.0;
  } else {
    const double t = c.r * std::sqrt(dof / (1 - c.r * c.r));
    boost::math::students_t dist(dof);
    c.p = std::clamp(2 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0, 1.0);
  }
  return c;
}

inline nlohmann::ordered_json report_to_json(const ClassificationReport& r) {
  nlohmann::ordered_json j;
  auto per = nlohmann::ordered_json::object();
  for (const auto& [intent, m] : r.per_intent)
    per[intent] = {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
  j["per_intent"] = per;
  j["weighted_f1"] = r.weighted_f1;
  j["auc_ovr"] = r.auc_ovr ? nlohmann::ordered_json(*r.auc_ovr) : nlohmann::ordered_json(nullptr);
  j["abstained"] = r.abstained;
  j["total"] = r.total;
  return j;
}

/// One row per intent, then a summary row named "__summary__" carrying the
/// weighted F1 in the f1 column and the AUC in the auc column.
inline void write_report_csv(std::ostream& out, const ClassificationReport& r) {
  out << "intent,precision,recall,f1,support,auc\n";
  for (const auto& [intent, m] : r.per_intent)
    out << intent << ',' << m.precision << ',' << m.recall << ',' << m.f1 << ',' << m.support << ",\n";
  out << "__summary__,,," << r.weighted_f1 << ',' << r.total << ',';
  if (r.auc_ovr) out << *r.auc_ovr;
  out << '\n';
}

}  // namespace lfgen
