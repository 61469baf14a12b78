#pragma once

// Candidate LF generation from an expanded (labeled) dataset: exclusive
// words, intent-unique entity types, exclusive word/entity pairs and five
// trained classifiers.

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "lfgen/corpus.hpp"
#include "lfgen/labeling_function.hpp"
#include "lfgen/parallel.hpp"
#include "lfgen/random.hpp"

namespace lfgen {

/// Token occurrence counts per intent over a labeled dataset. Counts are
/// occurrences, so a token repeated in one query counts more than once.
class ExclusivityTable {
 public:
  ExclusivityTable(std::vector<std::string> tokens, std::vector<std::string> intents)
      : tokens_(std::move(tokens)),
        intents_(std::move(intents)),
        occurrences_(tokens_.size(), std::vector<std::size_t>(intents_.size(), 0)),
        totals_(tokens_.size(), 0) {}

  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::vector<std::string>& intents() const noexcept { return intents_; }

  std::size_t occurrences(std::size_t token, std::size_t intent) const {
    return occurrences_[token][intent];
  }
  std::size_t total_occurrences(std::size_t token) const { return totals_[token]; }

  double exclusivity(std::size_t token, std::size_t intent) const {
    return totals_[token] == 0 ? 0.0
                               : static_cast<double>(occurrences_[token][intent]) /
                                     static_cast<double>(totals_[token]);
  }

  void add(std::size_t token, std::size_t intent, std::size_t count = 1) {
    occurrences_[token][intent] += count;
    totals_[token] += count;
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::string> intents_;
  std::vector<std::vector<std::size_t>> occurrences_;
  std::vector<std::size_t> totals_;
};

inline ExclusivityTable compute_exclusivity(const Dataset& expanded, const Vocabulary& vocab) {
  if (!expanded.fully_labeled()) throw ValidationError("exclusivity needs a fully labeled dataset");
  std::vector<std::string> intents(expanded.intents().begin(), expanded.intents().end());
  std::map<std::string, std::size_t> intent_index;
  for (std::size_t i = 0; i < intents.size(); ++i) intent_index[intents[i]] = i;
  ExclusivityTable table(vocab.tokens(), intents);
  for (const auto& q : expanded) {
    const auto c = intent_index.at(*q.intent);
    for (const auto& [col, count] : vectorize(q, vocab)) table.add(col, c, count);
  }
  return table;
}

/// One ContainsWordLabeller per (word, intent) with exclusivity at or above
/// the threshold, ordered by intent then word.
inline std::vector<LabelingFunction> generate_word_lfs(const ExclusivityTable& table, double threshold) {
  std::vector<LabelingFunction> out;
  for (std::size_t c = 0; c < table.intents().size(); ++c) {
    for (std::size_t t = 0; t < table.tokens().size(); ++t) {
      if (table.occurrences(t, c) == 0 || table.exclusivity(t, c) < threshold) continue;
      LabelingFunction lf;
      lf.name = "word:" + table.tokens()[t] + "=>" + table.intents()[c];
      lf.type = LfType::contains_word;
      lf.class_intent = table.intents()[c];
      lf.unique_words = {table.tokens()[t]};
      out.push_back(std::move(lf));
    }
  }
  return out;
}

/// One EntityLabeller per entity type seen under exactly one intent.
inline std::vector<LabelingFunction> generate_entity_lfs(const Dataset& expanded) {
  std::map<std::string, std::set<std::string>> intents_of;
  for (const auto& q : expanded) {
    if (!q.intent) continue;
    for (const auto& e : q.entities) intents_of[e.entity_type].insert(*q.intent);
  }
  std::vector<LabelingFunction> out;
  for (const auto& [type, intents] : intents_of) {
    if (intents.size() != 1) continue;
    LabelingFunction lf;
    lf.name = "entity:" + type + "=>" + *intents.begin();
    lf.type = LfType::entity;
    lf.class_intent = *intents.begin();
    lf.unique_entities = {type};
    out.push_back(std::move(lf));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return *a.class_intent < *b.class_intent;
  });
  return out;
}

/// Per (word, entity type) pair: number of queries of each intent that
/// contain both. Words are vocabulary tokens.
inline std::map<std::pair<std::string, std::string>, std::map<std::string, std::size_t>>
count_pairs(const Dataset& expanded, const Vocabulary& vocab) {
  std::map<std::pair<std::string, std::string>, std::map<std::string, std::size_t>> pairs;
  for (const auto& q : expanded) {
    if (!q.intent || q.entities.empty()) continue;
    std::set<std::string> words;
    for (auto& t : tokenize(q.text))
      if (vocab.find(t)) words.insert(std::move(t));
    std::set<std::string> types;
    for (const auto& e : q.entities) types.insert(e.entity_type);
    for (const auto& w : words)
      for (const auto& e : types) ++pairs[{w, e}][*q.intent];
  }
  return pairs;
}

/// EntityWordLabellers for word/entity pairs whose pair exclusivity (share
/// of the pair's queries held by its majority intent) reaches the threshold.
inline std::vector<LabelingFunction> generate_combo_lfs(const Dataset& expanded,
                                                        const ExclusivityTable& table,
                                                        double threshold) {
  const Vocabulary vocab(table.tokens());

  std::vector<LabelingFunction> out;
  for (const auto& [pair, per_intent] : count_pairs(expanded, vocab)) {
    std::size_t total = 0;
    const std::string* majority = nullptr;
    std::size_t majority_count = 0;
    for (const auto& [intent, n] : per_intent) {
      total += n;
      if (n > majority_count) {
        majority = &intent;
        majority_count = n;
      }
    }
    if (majority_count == 0) continue;
    const double exclusivity = static_cast<double>(majority_count) / static_cast<double>(total);
    if (exclusivity < threshold) continue;
    LabelingFunction lf;
    lf.name = "combo:" + pair.first + "+" + pair.second + "=>" + *majority;
    lf.type = LfType::entity_word;
    lf.class_intent = *majority;
    lf.unique_words = {pair.first};
    lf.unique_entities = {pair.second};
    out.push_back(std::move(lf));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return *a.class_intent < *b.class_intent;
  });
  return out;
}

struct MlOptions {
  ml::ForestOptions forest{};
  ml::TreeOptions tree{};
  std::size_t knn_k = 5;
  ml::LinearOptions linear{};
};

inline ml::TrainingSet make_training_set(const Dataset& train, const Vocabulary& vocab,
                                         const std::vector<std::string>& intents) {
  ml::TrainingSet set;
  set.dimension = vocab.size();
  set.classes = intents.size();
  for (const auto& q : train) {
    ml::SparseRow row;
    for (const auto& [col, count] : vectorize(q, vocab)) row.emplace_back(col, static_cast<double>(count));
    set.rows.push_back(std::move(row));
    set.labels.push_back(static_cast<std::size_t>(
        std::lower_bound(intents.begin(), intents.end(), *q.intent) - intents.begin()));
  }
  return set;
}

/// Five MLLabellers: random forest, decision tree, kNN, logistic regression
/// and linear SVM trained on `train` vectorized with `vocab`.
inline std::vector<LabelingFunction> generate_ml_lfs(const Dataset& train, const Vocabulary& vocab,
                                                     std::uint64_t seed, MlOptions options = {},
                                                     unsigned threads = 1) {
  if (!train.fully_labeled()) throw ValidationError("ML training data must be fully labeled");
  if (train.intents().size() < 2)
    throw ValidationError("ML labeling functions need at least two intents");
  const std::vector<std::string> intents(train.intents().begin(), train.intents().end());
  // Canonical row order, so the models do not depend on ids or input order.
  std::vector<Query> rows = train.queries();
  std::sort(rows.begin(), rows.end(), [](const Query& a, const Query& b) {
    return std::tie(a.text, *a.intent) < std::tie(b.text, *b.intent);
  });
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].id = canonical_id(i);
  const auto data = make_training_set(Dataset(std::move(rows)), vocab, intents);

  static constexpr std::array<const char*, 5> kinds = {
      "random_forest", "decision_tree", "k_nearest_neighbors", "logistic_regression", "linear_svm"};
  std::vector<std::shared_ptr<const ml::Classifier>> trained(kinds.size());
  parallel_for(kinds.size(), threads, [&](std::size_t i) {
    const auto s = derive_seed(seed, kinds[i]);
    switch (i) {
      case 0: trained[i] = std::make_shared<ml::RandomForest>(ml::RandomForest::fit(data, options.forest, s)); break;
      case 1: trained[i] = std::make_shared<ml::DecisionTree>(ml::DecisionTree::fit(data, options.tree, s)); break;
      case 2: trained[i] = std::make_shared<ml::KNearestNeighbors>(ml::KNearestNeighbors::fit(data, options.knn_k)); break;
      case 3: trained[i] = std::make_shared<ml::LinearModel>(ml::LinearModel::fit(data, ml::LinearLoss::logistic, options.linear)); break;
      case 4: trained[i] = std::make_shared<ml::LinearModel>(ml::LinearModel::fit(data, ml::LinearLoss::hinge, options.linear)); break;
    }
  });

  std::vector<LabelingFunction> out;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    auto model = std::make_shared<MlModel>();
    model->vocabulary = vocab;
    model->intents = intents;
    model->training_size = train.size();
    model->classifier = trained[i];
    LabelingFunction lf;
    lf.name = std::string("ml:") + kinds[i];
    lf.type = LfType::ml;
    lf.model = std::move(model);
    lf.support = train.size();
    out.push_back(std::move(lf));
  }
  return out;
}

/// Merges word LFs, and entity LFs, that vote the same intent into one list
/// LF each. Pair and ML LFs are left as they are.
inline std::vector<LabelingFunction> aggregate_per_intent(const std::vector<LabelingFunction>& lfs) {
  std::vector<LabelingFunction> out;
  std::map<std::pair<int, std::string>, std::size_t> slot;
  for (const auto& lf : lfs) {
    if (lf.type != LfType::contains_word && lf.type != LfType::entity) {
      out.push_back(lf);
      continue;
    }
    auto key = std::make_pair(static_cast<int>(lf.type), *lf.class_intent);
    auto it = slot.find(key);
    if (it == slot.end()) {
      LabelingFunction merged = lf;
      merged.name = (lf.type == LfType::contains_word ? "words=>" : "entities=>") + *lf.class_intent;
      slot.emplace(key, out.size());
      out.push_back(std::move(merged));
      continue;
    }
    auto& merged = out[it->second];
    auto& dst = lf.type == LfType::contains_word ? merged.unique_words : merged.unique_entities;
    const auto& src = lf.type == LfType::contains_word ? lf.unique_words : lf.unique_entities;
    dst.insert(dst.end(), src.begin(), src.end());
  }
  return out;
}

struct GeneratorOptions {
  double threshold = 0.8;
  bool aggregate_per_intent = false;
  bool include_ml = true;
  MlOptions ml{};
};

/// All candidate LFs for a generation partition, with supports attached.
/// ML LFs train on `ml_train` (normally the generation partition itself).
inline std::vector<LabelingFunction> generate_candidates(const Dataset& generation,
                                                         const Dataset& ml_train,
                                                         const GeneratorOptions& options,
                                                         std::uint64_t seed, unsigned threads = 1) {
  if (!(options.threshold >= 0 && options.threshold <= 1))
    throw ValidationError("generator threshold must be in [0, 1]");
  const Vocabulary vocab = build_vocabulary(generation);
  const auto table = compute_exclusivity(generation, vocab);
  std::vector<LabelingFunction> lfs = generate_word_lfs(table, options.threshold);
  auto entity = generate_entity_lfs(generation);
  auto combo = generate_combo_lfs(generation, table, options.threshold);
  lfs.insert(lfs.end(), entity.begin(), entity.end());
  lfs.insert(lfs.end(), combo.begin(), combo.end());
  if (options.aggregate_per_intent) lfs = aggregate_per_intent(lfs);
  for (auto& lf : lfs) lf.support = compute_support(lf, generation);
  if (options.include_ml) {
    auto ml_lfs = generate_ml_lfs(ml_train, build_vocabulary(ml_train), seed, options.ml, threads);
    lfs.insert(lfs.end(), ml_lfs.begin(), ml_lfs.end());
  }
  return lfs;
}

}  // namespace lfgen
