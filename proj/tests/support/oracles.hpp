#pragma once

// Brute-force reference implementations used to check the library. They
// share no code with it beyond the plain data types.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lfgen/corpus.hpp"

namespace oracle {

inline std::vector<std::string> words(const std::string& text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !std::isalnum(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && std::isalnum(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) {
      std::string w = text.substr(i, j - i);
      for (auto& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      out.push_back(w);
    }
    i = j;
  }
  return out;
}

struct Fraction {
  std::size_t num = 0, den = 0;
};

/// (token, intent) → occurrences / total occurrences of the token.
inline std::map<std::pair<std::string, std::string>, Fraction> exclusivity(const lfgen::Dataset& d) {
  std::map<std::string, std::size_t> total;
  std::map<std::pair<std::string, std::string>, std::size_t> per;
  std::set<std::string> intents;
  for (const auto& q : d) {
    intents.insert(*q.intent);
    for (const auto& w : words(q.text)) {
      ++total[w];
      ++per[{w, *q.intent}];
    }
  }
  std::map<std::pair<std::string, std::string>, Fraction> out;
  for (const auto& [w, n] : total)
    for (const auto& i : intents) out[{w, i}] = {per.count({w, i}) ? per.at({w, i}) : 0, n};
  return out;
}

/// Per-row plurality over votes (-1 abstains); ties and empty rows abstain.
inline std::vector<int> majority(const std::vector<std::vector<int>>& rows, int classes) {
  std::vector<int> out;
  for (const auto& row : rows) {
    int best = -1, best_count = 0, holders = 0;
    for (int c = 0; c < classes; ++c) {
      int n = 0;
      for (int v : row) n += v == c;
      if (n == 0) continue;
      if (n > best_count) {
        best = c;
        best_count = n;
        holders = 1;
      } else if (n == best_count) {
        ++holders;
      }
    }
    out.push_back(holders == 1 ? best : -1);
  }
  return out;
}

/// Support-weighted F1 via an explicit confusion matrix; -1 predictions abstain.
inline double weighted_f1(const std::vector<int>& gold, const std::vector<int>& pred, int classes) {
  std::vector<std::vector<double>> cm(classes, std::vector<double>(classes + 1, 0.0));
  for (std::size_t i = 0; i < gold.size(); ++i) cm[gold[i]][pred[i] < 0 ? classes : pred[i]] += 1;
  double sum = 0;
  for (int c = 0; c < classes; ++c) {
    double tp = cm[c][c], row = 0, col = 0;
    for (int k = 0; k <= classes; ++k) row += cm[c][k];
    for (int k = 0; k < classes; ++k) col += cm[k][c];
    double p = col > 0 ? tp / col : 0, r = row > 0 ? tp / row : 0;
    double f = p + r > 0 ? 2 * p * r / (p + r) : 0;
    sum += f * row;
  }
  return sum / static_cast<double>(gold.size());
}

/// Macro one-vs-rest AUC by counting every positive/negative pair.
inline double macro_auc(const std::vector<int>& gold, const std::vector<std::vector<double>>& scores,
                        int classes) {
  double sum = 0;
  int present = 0;
  for (int c = 0; c < classes; ++c) {
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (gold[i] != c) continue;
      for (std::size_t j = 0; j < gold.size(); ++j) {
        if (gold[j] == c) continue;
        pairs += 1;
        if (scores[i][c] > scores[j][c]) wins += 1;
        else if (scores[i][c] == scores[j][c]) wins += 0.5;
      }
    }
    if (pairs == 0) continue;  // class absent from gold
    sum += wins / pairs;
    ++present;
  }
  return sum / present;
}

/// Uncentered textbook formula.
inline double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

/// Labeled corpus of up to `max_queries` queries over `intents` intents and a
/// vocabulary of `vocab` words w0..w{vocab-1}.
inline lfgen::Dataset random_corpus(std::mt19937_64& rng, std::size_t max_queries, std::size_t intents,
                                    std::size_t vocab) {
  std::uniform_int_distribution<std::size_t> nq(1, max_queries), ni(0, intents - 1), nw(0, vocab - 1),
      len(1, 6);
  std::vector<lfgen::Query> qs;
  const std::size_t n = nq(rng);
  for (std::size_t i = 0; i < n; ++i) {
    lfgen::Query q;
    q.id = lfgen::canonical_id(i);
    const std::size_t l = len(rng);
    for (std::size_t k = 0; k < l; ++k) q.text += (k ? " " : "") + std::string(k % 2 ? "W" : "w") + std::to_string(nw(rng));
    q.intent = "I" + std::to_string(ni(rng));
    qs.push_back(std::move(q));
  }
  return lfgen::Dataset(std::move(qs));
}

}  // namespace oracle
