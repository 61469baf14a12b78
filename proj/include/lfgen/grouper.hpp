#pragma once

// Expands a labeled seed with unlabeled queries whose embedding is close to
// some seed query. Adoption is single-pass: adopted queries are never used as
// match targets.

#include <map>
#include <string>
#include <vector>

#include "lfgen/corpus.hpp"
#include "lfgen/embedder.hpp"
#include "lfgen/parallel.hpp"

namespace lfgen {

struct Assignment {
  std::string seed_id;
  double similarity = 0;
};

struct GroupingResult {
  Dataset expanded;   // seed queries, then adopted queries in input order
  Dataset leftovers;  // unadopted, intent absent
  std::map<std::string, Assignment> assignments;  // adopted id → best seed match
};

inline GroupingResult group(const Dataset& labeled, const Dataset& unlabeled,
                            const EmbeddingProvider& provider, double threshold,
                            unsigned threads = 1) {
  if (labeled.empty()) throw ValidationError("grouper needs a non-empty labeled seed");
  if (!labeled.fully_labeled()) throw ValidationError("every seed query must carry an intent");
  if (!(threshold > 0 && threshold <= 1))
    throw ValidationError("grouper threshold must be in (0, 1]");
  for (const auto& q : unlabeled)
    if (q.intent) throw ValidationError("unlabeled query " + q.id + " already has an intent");

  std::vector<Embedding> seed(labeled.size());
  parallel_for(labeled.size(), threads, [&](std::size_t i) { seed[i] = provider.embed(labeled[i].text); });

  struct Match {
    std::size_t seed_index = 0;
    double similarity = -2;
  };
  std::vector<Match> best(unlabeled.size());
  parallel_for(unlabeled.size(), threads, [&](std::size_t u) {
    const Embedding e = provider.embed(unlabeled[u].text);
    Match m;
    for (std::size_t s = 0; s < seed.size(); ++s) {
      double sim = cosine(e, seed[s]);
      if (sim > m.similarity ||
          (sim == m.similarity && labeled[s].id < labeled[m.seed_index].id)) {
        m = {s, sim};
      }
    }
    best[u] = m;
  });

  std::vector<Query> expanded = labeled.queries();
  std::vector<Query> leftovers;
  GroupingResult result;
  for (std::size_t u = 0; u < unlabeled.size(); ++u) {
    Query q = unlabeled[u];
    const Query& match = labeled[best[u].seed_index];
    if (best[u].similarity >= threshold) {
      q.intent = match.intent;
      result.assignments.emplace(q.id, Assignment{match.id, best[u].similarity});
      expanded.push_back(std::move(q));
    } else {
      leftovers.push_back(std::move(q));
    }
  }
  result.expanded = Dataset(std::move(expanded));
  result.leftovers = Dataset(std::move(leftovers));
  return result;
}

}  // namespace lfgen
