#pragma once

#include <ostream>
#include <vector>

#include "lfgen/corpus_io.hpp"
#include "lfgen/labeler.hpp"

namespace lfgen {

/// NLU training data in the `- intent:` / `examples: |` layout: the seed
/// queries followed by every labeled query whose label is not an abstention.
inline void write_training_yaml(std::ostream& out, const Dataset& seed, const Dataset& labeled) {
  std::vector<Query> qs;
  std::set<std::string> ids;
  for (const auto& q : seed) {
    if (!q.intent) continue;
    qs.push_back(q);
    ids.insert(q.id);
  }
  for (const auto& q : labeled) {
    if (!q.intent) continue;
    Query copy = q;
    if (ids.count(copy.id)) copy.id += "+";
    ids.insert(copy.id);
    qs.push_back(std::move(copy));
  }
  write_bracket(out, Dataset(std::move(qs)));
}

inline Dataset labels_to_dataset(const std::vector<LabeledQuery>& labels) {
  std::vector<Query> qs;
  for (const auto& l : labels) qs.push_back(l.query);
  return Dataset(std::move(qs));
}

}  // namespace lfgen
