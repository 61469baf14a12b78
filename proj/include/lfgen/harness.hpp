#pragma once

// Experiment protocols over repeated seeded runs:
//   rq1   labeling quality of pruned LFs against a random-label control
//   rq2   AUC of high/medium/low groups ranked by each LF characteristic
//   curve AUC as shuffled LFs are added one at a time
//   sweep mean AUC while one setting varies from 0.1 to 1.0
//
// Every random choice derives from (base seed XOR repetition index), so a
// config fully determines every output byte regardless of thread count.

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lfgen/corpus.hpp"
#include "lfgen/corpus_io.hpp"
#include "lfgen/embedder.hpp"
#include "lfgen/export.hpp"
#include "lfgen/generator.hpp"
#include "lfgen/grouper.hpp"
#include "lfgen/labeler.hpp"
#include "lfgen/metrics.hpp"
#include "lfgen/parallel.hpp"
#include "lfgen/random.hpp"

namespace lfgen {

struct RunConfig {
  std::string dataset_path;
  std::string provider = "lexical";  // "lexical" or "precomputed"
  std::string embeddings_path;       // required for "precomputed"
  std::optional<double> grouper_threshold;  // provider default when absent
  double generator_threshold = 0.8;
  double pruner_threshold = 0.7;
  double holdout = 0.4;
  std::array<double, 3> ratios{0.3, 0.2, 0.5};
  std::size_t repetitions = 10;
  std::uint64_t base_seed = 42;
  unsigned threads = 1;
  bool aggregate_per_intent = false;
  bool paper_literal_ml_train = false;
  AucAveraging auc_averaging = AucAveraging::macro;

  void validate() const {
    auto in_open_unit = [](double v) { return v > 0 && v < 1; };
    if (!in_open_unit(holdout)) throw ValidationError("holdout fraction must be in (0, 1)");
    for (double r : ratios)
      if (!in_open_unit(r)) throw ValidationError("split ratios must be in (0, 1)");
    check_ratios(ratios);
    if (repetitions < 1) throw ValidationError("repetitions must be at least 1");
    if (grouper_threshold && !(*grouper_threshold > 0 && *grouper_threshold <= 1))
      throw ValidationError("grouper threshold must be in (0, 1]");
    if (!(generator_threshold >= 0 && generator_threshold <= 1))
      throw ValidationError("generator threshold must be in [0, 1]");
    if (!(pruner_threshold > 0 && pruner_threshold <= 1))
      throw ValidationError("pruner threshold must be in (0, 1]");
    if (provider != "lexical" && provider != "precomputed")
      throw ValidationError("unknown provider: " + provider);
    if (provider == "precomputed" && embeddings_path.empty())
      throw ValidationError("the precomputed provider needs an embeddings file");
  }
};

/// Resolved settings as written to config.json. Thread count is left out:
/// it never changes results.
inline nlohmann::ordered_json config_to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["dataset"] = c.dataset_path;
  j["provider"] = c.provider;
  j["embeddings"] = c.embeddings_path;
  j["grouper_threshold"] =
      c.grouper_threshold ? nlohmann::ordered_json(*c.grouper_threshold) : nlohmann::ordered_json(nullptr);
  j["generator_threshold"] = c.generator_threshold;
  j["pruner_threshold"] = c.pruner_threshold;
  j["holdout"] = c.holdout;
  j["ratios"] = c.ratios;
  j["repetitions"] = c.repetitions;
  j["seed"] = c.base_seed;
  j["aggregate_per_intent"] = c.aggregate_per_intent;
  j["paper_literal_ml_train"] = c.paper_literal_ml_train;
  j["auc_averaging"] = c.auc_averaging == AucAveraging::macro ? "macro" : "weighted";
  return j;
}

inline std::uint64_t repetition_seed(std::uint64_t base, std::size_t rep) { return base ^ rep; }

/// Provider for a run. The lexical provider fits its IDF weights on `corpus`.
inline std::shared_ptr<const EmbeddingProvider> make_provider(const std::string& kind,
                                                              const std::string& embeddings_path,
                                                              const std::vector<std::string>& corpus) {
  if (kind == "lexical") return std::make_shared<LexicalProvider>(corpus);
  if (kind == "precomputed") return std::make_shared<PrecomputedProvider>(embeddings_path);
  throw ValidationError("unknown provider: " + kind);
}

inline std::vector<std::string> texts_of(std::initializer_list<const Dataset*> sets) {
  std::vector<std::string> out;
  for (const auto* d : sets)
    for (const auto& q : *d) out.push_back(q.text);
  return out;
}

/// Everything the Grouper → Generator → Pruner pipeline produces for one seed.
struct PipelineResult {
  GroupingResult grouping;
  Dataset generation;
  Dataset holdout;
  std::vector<LabelingFunction> candidates;
  std::vector<LFQuality> qualities;  // one per candidate, on the holdout
  std::vector<LabelingFunction> pruned;
};

struct PipelineSettings {
  double grouper_threshold = 0.8;
  double generator_threshold = 0.8;
  double pruner_threshold = 0.7;
  double holdout = 0.4;
  bool aggregate_per_intent = false;
  bool paper_literal_ml_train = false;
  unsigned threads = 1;
};

inline PipelineResult run_pipeline(const Dataset& labeled, const Dataset& unlabeled,
                                   const EmbeddingProvider& provider, const PipelineSettings& s,
                                   std::uint64_t seed) {
  PipelineResult r;
  r.grouping = group(labeled, unlabeled, provider, s.grouper_threshold, s.threads);
  const std::array<double, 2> parts{1.0 - s.holdout, s.holdout};
  auto split = split_by_ratios(r.grouping.expanded, parts, derive_seed(seed, "holdout"));
  r.generation = std::move(split[0]);
  r.holdout = std::move(split[1]);
  if (r.generation.empty() || r.holdout.empty())
    throw ValidationError("expanded dataset too small to hold out an evaluation part");
  GeneratorOptions gen;
  gen.threshold = s.generator_threshold;
  gen.aggregate_per_intent = s.aggregate_per_intent;
  const Dataset& ml_train = s.paper_literal_ml_train ? r.grouping.expanded : r.generation;
  r.candidates = generate_candidates(r.generation, ml_train, gen, derive_seed(seed, "generator"), s.threads);
  r.qualities = score_lfs(r.candidates, r.holdout, s.threads);
  r.pruned = prune(r.candidates, r.qualities, s.pruner_threshold);
  return r;
}

inline std::vector<std::string> gold_of(const Dataset& d) {
  std::vector<std::string> gold;
  for (const auto& q : d) gold.push_back(q.intent.value_or(""));
  return gold;
}

/// MLV labels for `eval` plus a report scored with vote fractions over `intents`.
struct Evaluation {
  std::vector<LabeledQuery> labels;
  ClassificationReport report;
};

inline Evaluation evaluate_lfs(const std::vector<LabelingFunction>& lfs, const Dataset& eval,
                               const std::vector<std::string>& intents, AucAveraging averaging,
                               unsigned threads = 1) {
  const auto matrix = apply_lfs(lfs, eval, threads);
  const auto assigned = majority_vote(matrix);
  const auto scores = vote_fractions(matrix, intents);
  Evaluation e;
  const auto gold = gold_of(eval);
  e.report = classification_report(gold, assigned, &scores, averaging);
  for (std::size_t i = 0; i < eval.size(); ++i) {
    LabeledQuery lq{eval[i], {}};
    lq.query.intent = assigned[i];
    for (std::size_t c = 0; c < intents.size(); ++c)
      if (scores.rows[i][c] > 0) lq.votes[intents[c]] = scores.rows[i][c];
    e.labels.push_back(std::move(lq));
  }
  return e;
}

/// Uniform random intent per query.
inline std::vector<std::optional<std::string>> random_labels(std::size_t n,
                                                             const std::vector<std::string>& intents,
                                                             std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::optional<std::string>> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(intents[rng.below(intents.size())]);
  return out;
}

/// AUC after adding the first k of `order` for k = 1..n. Entries are
/// nullopt when the eval set has a single gold intent.
inline std::vector<std::optional<double>> additive_curve(const LabelMatrix& matrix,
                                                         const std::vector<std::size_t>& order,
                                                         const std::vector<std::string>& gold,
                                                         const std::vector<std::string>& intents,
                                                         AucAveraging averaging) {
  std::vector<std::optional<std::size_t>> column_of(matrix.intents.size());
  for (std::size_t i = 0; i < matrix.intents.size(); ++i) {
    auto it = std::find(intents.begin(), intents.end(), matrix.intents[i]);
    if (it != intents.end()) column_of[i] = static_cast<std::size_t>(it - intents.begin());
  }
  const bool scorable = std::set<std::string>(gold.begin(), gold.end()).size() >= 2;
  std::vector<std::vector<double>> counts(matrix.rows.size(), std::vector<double>(intents.size(), 0.0));
  std::vector<double> totals(matrix.rows.size(), 0.0);
  std::vector<std::optional<double>> curve;
  for (std::size_t col : order) {
    for (std::size_t r = 0; r < matrix.rows.size(); ++r) {
      auto v = matrix.at(r, col);
      if (v == LabelMatrix::kAbstain) continue;
      totals[r] += 1;
      if (auto c = column_of[static_cast<std::size_t>(v)]) counts[r][*c] += 1;
    }
    if (!scorable) {
      curve.emplace_back();
      continue;
    }
    ScoreTable scores{intents, counts};
    for (std::size_t r = 0; r < scores.rows.size(); ++r)
      if (totals[r] > 0)
        for (double& x : scores.rows[r]) x /= totals[r];
    curve.push_back(auc_ovr(gold, scores, averaging));
  }
  return curve;
}

inline std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span(order));
  return order;
}

struct SplitSizes {
  std::size_t labeled = 0, eval = 0, unlabeled = 0, adopted = 0, leftovers = 0, generation = 0,
              holdout = 0;
};

struct Rq1Repetition {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::optional<std::string> error;
  SplitSizes sizes;
  std::size_t lfs_generated = 0;
  std::size_t lfs_pruned = 0;
  ClassificationReport lf_report;
  ClassificationReport control_report;
  std::optional<double> all_lfs_auc;  // MLV AUC of every generated LF
  std::vector<std::optional<double>> curve;
};

struct ExperimentReport {
  RunConfig config;
  std::vector<Rq1Repetition> repetitions;
  std::optional<double> mean_auc, mean_f1, mean_control_auc, mean_control_f1;
};

inline std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

inline std::string format_optional(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string();
}

/// Serialized stderr progress lines.
class ProgressLog {
 public:
  explicit ProgressLog(std::ostream* out) : out_(out) {}

  void line(const std::string& s) {
    if (!out_) return;
    std::lock_guard lock(mutex_);
    *out_ << s << '\n';
  }

 private:
  std::ostream* out_;
  std::mutex mutex_;
};

namespace detail {

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << content;
}

inline std::string rep_dir_name(std::size_t rep) {
  std::ostringstream os;
  os << "rep_" << std::setw(2) << std::setfill('0') << rep;
  return os.str();
}

/// Splits the dataset for one repetition: labeled, eval, unlabeled-without-intents.
struct RepetitionData {
  Dataset labeled, eval, unlabeled_gold, unlabeled;
};

inline RepetitionData prepare_repetition(const Dataset& dataset, const RunConfig& config,
                                         std::uint64_t seed) {
  auto parts = split_dataset(dataset, config.ratios, derive_seed(seed, "split"));
  RepetitionData d;
  d.labeled = std::move(parts[0]);
  d.eval = std::move(parts[1]);
  d.unlabeled_gold = std::move(parts[2]);
  d.unlabeled = d.unlabeled_gold.without_intents();
  if (d.labeled.empty()) throw ValidationError("labeled split is empty");
  return d;
}

inline PipelineSettings settings_for(const RunConfig& c, const EmbeddingProvider& provider) {
  PipelineSettings s;
  s.grouper_threshold = c.grouper_threshold.value_or(provider.default_threshold());
  s.generator_threshold = c.generator_threshold;
  s.pruner_threshold = c.pruner_threshold;
  s.holdout = c.holdout;
  s.aggregate_per_intent = c.aggregate_per_intent;
  s.paper_literal_ml_train = c.paper_literal_ml_train;
  s.threads = 1;
  return s;
}

/// Gold-labeled eval set augmented with the Grouper leftovers.
inline Dataset augmented_eval(const Dataset& eval, const Dataset& unlabeled_gold,
                              const Dataset& leftovers) {
  std::set<std::string> left_ids;
  for (const auto& q : leftovers) left_ids.insert(q.id);
  std::vector<Query> qs = eval.queries();
  for (const auto& q : unlabeled_gold)
    if (left_ids.count(q.id)) qs.push_back(q);
  return Dataset(std::move(qs));
}

inline Dataset load_for_experiment(const RunConfig& config) {
  Dataset dataset = load_dataset(config.dataset_path);
  if (!dataset.fully_labeled()) throw ValidationError("experiment datasets must be fully labeled");
  if (dataset.intents().size() < 2) throw ValidationError("experiments need at least two intents");
  return dataset;
}

/// The precomputed provider is loaded once and shared; the lexical one is
/// fitted per repetition on the texts the Grouper sees.
struct ProviderSource {
  const RunConfig& config;
  std::shared_ptr<const EmbeddingProvider> shared;

  explicit ProviderSource(const RunConfig& c) : config(c) {
    if (c.provider == "precomputed") shared = make_provider(c.provider, c.embeddings_path, {});
  }

  std::shared_ptr<const EmbeddingProvider> for_repetition(const RepetitionData& d) const {
    if (shared) return shared;
    return make_provider(config.provider, config.embeddings_path, texts_of({&d.labeled, &d.unlabeled}));
  }
};

}  // namespace detail

/// Runs the labeling experiment. When `out_dir` is set, the report bundle is
/// written there: config.json, rep_XX/{lfs.json, pruned.json, labels.jsonl,
/// metrics.json, nlu_lf.yml, nlu_random.yml}, summary.csv and curve.csv.
inline ExperimentReport run_rq1(const RunConfig& config,
                                const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                                std::ostream* log = nullptr) {
  namespace fs = std::filesystem;
  config.validate();
  const Dataset dataset = detail::load_for_experiment(config);
  const std::vector<std::string> intents(dataset.intents().begin(), dataset.intents().end());
  const detail::ProviderSource providers(config);
  ProgressLog progress(log);
  if (out_dir) fs::create_directories(*out_dir);

  ExperimentReport report;
  report.config = config;
  report.repetitions.resize(config.repetitions);
  parallel_for(config.repetitions, config.threads, [&](std::size_t rep) {
    Rq1Repetition& r = report.repetitions[rep];
    r.index = rep;
    r.seed = repetition_seed(config.base_seed, rep);
    std::optional<fs::path> dir;
    if (out_dir) {
      dir = *out_dir / detail::rep_dir_name(rep);
      fs::create_directories(*dir);
    }
    try {
      auto data = detail::prepare_repetition(dataset, config, r.seed);
      auto provider = providers.for_repetition(data);
      auto result = run_pipeline(data.labeled, data.unlabeled, *provider,
                                 detail::settings_for(config, *provider), r.seed);
      const Dataset eval = detail::augmented_eval(data.eval, data.unlabeled_gold, result.grouping.leftovers);
      r.sizes = {data.labeled.size(),      eval.size(),
                 data.unlabeled.size(),    result.grouping.assignments.size(),
                 result.grouping.leftovers.size(), result.generation.size(),
                 result.holdout.size()};
      r.lfs_generated = result.candidates.size();
      r.lfs_pruned = result.pruned.size();
      if (result.pruned.empty()) throw ValidationError("pruning left no labeling functions");

      auto evaluation = evaluate_lfs(result.pruned, eval, intents, config.auc_averaging);
      r.lf_report = evaluation.report;

      const auto gold = gold_of(eval);
      const auto control = random_labels(eval.size(), intents, derive_seed(r.seed, "control"));
      const auto control_scores = indicator_scores(control, intents);
      r.control_report = classification_report(gold, control, &control_scores, config.auc_averaging);

      const auto full_matrix = apply_lfs(result.candidates, eval);
      r.curve = additive_curve(full_matrix, shuffled_order(result.candidates.size(), derive_seed(r.seed, "curve")),
                               gold, intents, config.auc_averaging);
      r.all_lfs_auc = r.curve.back();

      if (dir) {
        // Queries the Grouper adopted, relabeled by the LFs, extend the seed
        // for NLU training; the random arm labels the same queries at random.
        std::vector<Query> adopted;
        for (const auto& q : result.grouping.expanded)
          if (result.grouping.assignments.count(q.id)) adopted.push_back(q);
        const Dataset adopted_set(std::move(adopted));
        Dataset lf_labeled, random_labeled;
        if (!adopted_set.empty()) {
          lf_labeled = labels_to_dataset(label_queries(result.pruned, adopted_set));
          const auto rnd = random_labels(adopted_set.size(), intents, derive_seed(r.seed, "nlu-random"));
          std::vector<Query> qs = adopted_set.queries();
          for (std::size_t i = 0; i < qs.size(); ++i) qs[i].intent = rnd[i];
          random_labeled = Dataset(std::move(qs));
        }
        std::ostringstream nlu_lf, nlu_random, labels;
        write_training_yaml(nlu_lf, data.labeled, lf_labeled);
        write_training_yaml(nlu_random, data.labeled, random_labeled);
        write_labels_jsonl(labels, evaluation.labels);
        detail::write_file(*dir / "nlu_lf.yml", nlu_lf.str());
        detail::write_file(*dir / "nlu_random.yml", nlu_random.str());
        detail::write_file(*dir / "labels.jsonl", labels.str());
        save_lfs((*dir / "lfs.json").string(), result.candidates);
        detail::write_file(*dir / "pruned.json",
                           qualities_to_json(select_qualities(result.pruned, result.qualities)).dump(2) + "\n");
      }
      progress.line("rep " + std::to_string(rep) + ": " + std::to_string(r.lfs_generated) + " LFs, " +
                    std::to_string(r.lfs_pruned) + " kept, AUC " + format_optional(r.lf_report.auc_ovr));
    } catch (const std::exception& e) {
      r.error = e.what();
      progress.line("rep " + std::to_string(rep) + " failed: " + e.what());
    }
    if (dir) {
      nlohmann::ordered_json m;
      m["repetition"] = rep;
      m["seed"] = r.seed;
      m["error"] = r.error ? nlohmann::ordered_json(*r.error) : nlohmann::ordered_json(nullptr);
      m["sizes"] = {{"labeled", r.sizes.labeled},       {"eval", r.sizes.eval},
                    {"unlabeled", r.sizes.unlabeled},   {"adopted", r.sizes.adopted},
                    {"leftovers", r.sizes.leftovers},   {"generation", r.sizes.generation},
                    {"holdout", r.sizes.holdout}};
      m["lfs_generated"] = r.lfs_generated;
      m["lfs_pruned"] = r.lfs_pruned;
      if (!r.error) {
        m["lf_labeling"] = report_to_json(r.lf_report);
        m["random_control"] = report_to_json(r.control_report);
        m["all_lfs_auc"] = r.all_lfs_auc ? nlohmann::ordered_json(*r.all_lfs_auc) : nlohmann::ordered_json(nullptr);
      }
      detail::write_file(*dir / "metrics.json", m.dump(2) + "\n");
    }
  });

  auto mean = [&](auto get) -> std::optional<double> {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& r : report.repetitions) {
      if (r.error) continue;
      if (auto v = get(r)) {
        sum += *v;
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  };
  report.mean_auc = mean([](const Rq1Repetition& r) { return r.lf_report.auc_ovr; });
  report.mean_f1 = mean([](const Rq1Repetition& r) { return std::optional(r.lf_report.weighted_f1); });
  report.mean_control_auc = mean([](const Rq1Repetition& r) { return r.control_report.auc_ovr; });
  report.mean_control_f1 = mean([](const Rq1Repetition& r) { return std::optional(r.control_report.weighted_f1); });

  if (out_dir) {
    detail::write_file(*out_dir / "config.json", config_to_json(config).dump(2) + "\n");
    std::ostringstream summary;
    summary << "repetition,seed,status,labeled,eval,unlabeled,adopted,lfs_generated,lfs_pruned,"
               "auc,weighted_f1,random_auc,random_weighted_f1\n";
    for (const auto& r : report.repetitions) {
      summary << r.index << ',' << r.seed << ',' << (r.error ? "failed" : "ok") << ',' << r.sizes.labeled
              << ',' << r.sizes.eval << ',' << r.sizes.unlabeled << ',' << r.sizes.adopted << ','
              << r.lfs_generated << ',' << r.lfs_pruned << ',';
      if (!r.error)
        summary << format_optional(r.lf_report.auc_ovr) << ',' << format_number(r.lf_report.weighted_f1) << ','
                << format_optional(r.control_report.auc_ovr) << ','
                << format_number(r.control_report.weighted_f1);
      else
        summary << ",,,";
      summary << '\n';
    }
    summary << "mean,,,,,,,,," << format_optional(report.mean_auc) << ',' << format_optional(report.mean_f1)
            << ',' << format_optional(report.mean_control_auc) << ','
            << format_optional(report.mean_control_f1) << '\n';
    detail::write_file(*out_dir / "summary.csv", summary.str());

    std::ostringstream curve;
    curve << "repetition,k,auc\n";
    for (const auto& r : report.repetitions)
      for (std::size_t k = 0; k < r.curve.size(); ++k)
        curve << r.index << ',' << (k + 1) << ',' << format_optional(r.curve[k]) << '\n';
    detail::write_file(*out_dir / "curve.csv", curve.str());
  }
  return report;
}

// ---------------------------------------------------------------------------
// LF characteristic groups

enum class Characteristic { coverage, accuracy, lf_support };

inline std::string to_string(Characteristic c) {
  switch (c) {
    case Characteristic::coverage: return "coverage";
    case Characteristic::accuracy: return "accuracy";
    case Characteristic::lf_support: return "lf_support";
  }
  return "";
}

inline double characteristic_value(const LFQuality& q, Characteristic c) {
  switch (c) {
    case Characteristic::coverage: return q.coverage;
    case Characteristic::accuracy: return q.accuracy;
    case Characteristic::lf_support: return static_cast<double>(q.lf_support);
  }
  return 0;
}

struct CharacteristicGroups {
  std::size_t group_size = 0;
  bool shrunk = false;
  std::vector<std::size_t> high, medium, low;  // indices into the LF list
};

/// Ranks LFs by the characteristic (descending, ties by lf_name) and takes
/// the top, median-centered and bottom groups of 20, or floor(n/3) each
/// when fewer than 60 LFs exist.
inline CharacteristicGroups characteristic_groups(const std::vector<LFQuality>& qualities,
                                                  Characteristic c, std::size_t preferred = 20) {
  const std::size_t n = qualities.size();
  if (n < 3) throw ValidationError("characteristic grouping needs at least three LFs");
  std::vector<std::size_t> rank(n);
  std::iota(rank.begin(), rank.end(), 0);
  std::sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
    const double va = characteristic_value(qualities[a], c);
    const double vb = characteristic_value(qualities[b], c);
    if (va != vb) return va > vb;
    return qualities[a].lf_name < qualities[b].lf_name;
  });
  CharacteristicGroups g;
  g.shrunk = n < 3 * preferred;
  g.group_size = g.shrunk ? n / 3 : preferred;
  const std::size_t mid_start = (n - g.group_size) / 2;
  g.high.assign(rank.begin(), rank.begin() + static_cast<std::ptrdiff_t>(g.group_size));
  g.medium.assign(rank.begin() + static_cast<std::ptrdiff_t>(mid_start),
                  rank.begin() + static_cast<std::ptrdiff_t>(mid_start + g.group_size));
  g.low.assign(rank.end() - static_cast<std::ptrdiff_t>(g.group_size), rank.end());
  return g;
}

struct GroupAuc {
  std::optional<double> high, medium, low;
};

struct Rq2Repetition {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::optional<std::string> error;
  std::size_t lfs_generated = 0;
  std::size_t group_size = 0;
  bool shrunk = false;
  std::map<std::string, GroupAuc> groups;  // characteristic → group AUCs
  std::optional<Correlation> coverage_accuracy;
};

struct Rq2Report {
  RunConfig config;
  std::vector<Rq2Repetition> repetitions;
  std::map<std::string, GroupAuc> mean_groups;
  std::optional<double> mean_r;
};

inline std::optional<double> mlv_auc(const std::vector<LabelingFunction>& lfs, const std::vector<std::size_t>& pick,
                                     const Dataset& eval, const std::vector<std::string>& intents,
                                     AucAveraging averaging) {
  std::vector<LabelingFunction> chosen;
  for (auto i : pick) chosen.push_back(lfs[i]);
  if (chosen.empty()) return std::nullopt;
  return evaluate_lfs(chosen, eval, intents, averaging).report.auc_ovr;
}

/// When `out_dir` is set: config.json, rep_XX/{lfs.json, qualities.json,
/// rq2.json} and summary.csv (characteristic, group, mean AUC).
inline Rq2Report run_rq2(const RunConfig& config,
                         const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                         std::ostream* log = nullptr) {
  namespace fs = std::filesystem;
  config.validate();
  const Dataset dataset = detail::load_for_experiment(config);
  const std::vector<std::string> intents(dataset.intents().begin(), dataset.intents().end());
  const detail::ProviderSource providers(config);
  ProgressLog progress(log);
  if (out_dir) fs::create_directories(*out_dir);
  static constexpr std::array<Characteristic, 3> kCharacteristics = {
      Characteristic::coverage, Characteristic::accuracy, Characteristic::lf_support};

  Rq2Report report;
  report.config = config;
  report.repetitions.resize(config.repetitions);
  parallel_for(config.repetitions, config.threads, [&](std::size_t rep) {
    Rq2Repetition& r = report.repetitions[rep];
    r.index = rep;
    r.seed = repetition_seed(config.base_seed, rep);
    std::optional<fs::path> dir;
    if (out_dir) {
      dir = *out_dir / detail::rep_dir_name(rep);
      fs::create_directories(*dir);
    }
    try {
      auto data = detail::prepare_repetition(dataset, config, r.seed);
      auto provider = providers.for_repetition(data);
      auto result = run_pipeline(data.labeled, data.unlabeled, *provider,
                                 detail::settings_for(config, *provider), r.seed);
      const Dataset eval = detail::augmented_eval(data.eval, data.unlabeled_gold, result.grouping.leftovers);
      r.lfs_generated = result.candidates.size();
      for (auto c : kCharacteristics) {
        auto g = characteristic_groups(result.qualities, c);
        r.group_size = g.group_size;
        r.shrunk = g.shrunk;
        r.groups[to_string(c)] = {mlv_auc(result.candidates, g.high, eval, intents, config.auc_averaging),
                                  mlv_auc(result.candidates, g.medium, eval, intents, config.auc_averaging),
                                  mlv_auc(result.candidates, g.low, eval, intents, config.auc_averaging)};
      }
      if (r.shrunk)
        progress.line("rep " + std::to_string(rep) + ": only " + std::to_string(r.lfs_generated) +
                      " LFs, using groups of " + std::to_string(r.group_size));
      std::vector<double> cov, acc;
      for (const auto& q : result.qualities) {
        cov.push_back(q.coverage);
        acc.push_back(q.accuracy);
      }
      try {
        r.coverage_accuracy = pearson(cov, acc);
      } catch (const ValidationError&) {
        // Constant coverage or accuracy: correlation undefined.
      }
      if (dir) {
        save_lfs((*dir / "lfs.json").string(), result.candidates);
        detail::write_file(*dir / "qualities.json", qualities_to_json(result.qualities).dump(2) + "\n");
      }
    } catch (const std::exception& e) {
      r.error = e.what();
      progress.line("rep " + std::to_string(rep) + " failed: " + e.what());
    }
    if (dir) {
      nlohmann::ordered_json j;
      j["repetition"] = rep;
      j["seed"] = r.seed;
      j["error"] = r.error ? nlohmann::ordered_json(*r.error) : nlohmann::ordered_json(nullptr);
      j["lfs_generated"] = r.lfs_generated;
      j["group_size"] = r.group_size;
      j["shrunk"] = r.shrunk;
      auto groups = nlohmann::ordered_json::object();
      auto opt = [](const std::optional<double>& v) {
        return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
      };
      for (const auto& [name, g] : r.groups)
        groups[name] = {{"high", opt(g.high)}, {"medium", opt(g.medium)}, {"low", opt(g.low)}};
      j["groups"] = groups;
      if (r.coverage_accuracy)
        j["coverage_accuracy_pearson"] = {{"r", r.coverage_accuracy->r}, {"p", r.coverage_accuracy->p}};
      else
        j["coverage_accuracy_pearson"] = nullptr;
      detail::write_file(*dir / "rq2.json", j.dump(2) + "\n");
    }
  });

  auto mean_of = [&](auto get) -> std::optional<double> {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& r : report.repetitions) {
      if (r.error) continue;
      if (auto v = get(r)) {
        sum += *v;
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  };
  for (auto c : kCharacteristics) {
    const auto name = to_string(c);
    auto pick = [&](auto member) {
      return mean_of([&](const Rq2Repetition& r) -> std::optional<double> {
        auto it = r.groups.find(name);
        if (it == r.groups.end()) return std::nullopt;
        return it->second.*member;
      });
    };
    report.mean_groups[name] = {pick(&GroupAuc::high), pick(&GroupAuc::medium), pick(&GroupAuc::low)};
  }
  report.mean_r = mean_of([](const Rq2Repetition& r) -> std::optional<double> {
    if (!r.coverage_accuracy) return std::nullopt;
    return r.coverage_accuracy->r;
  });

  if (out_dir) {
    detail::write_file(*out_dir / "config.json", config_to_json(config).dump(2) + "\n");
    std::ostringstream summary;
    summary << "characteristic,group,mean_auc\n";
    for (const auto& [name, g] : report.mean_groups) {
      summary << name << ",high," << format_optional(g.high) << '\n';
      summary << name << ",medium," << format_optional(g.medium) << '\n';
      summary << name << ",low," << format_optional(g.low) << '\n';
    }
    summary << "coverage_accuracy_r,mean," << format_optional(report.mean_r) << '\n';
    detail::write_file(*out_dir / "summary.csv", summary.str());
  }
  return report;
}

// ---------------------------------------------------------------------------
// Additive curve

struct CurveReport {
  RunConfig config;
  std::vector<std::vector<std::optional<double>>> curves;  // per repetition
  std::vector<std::optional<std::string>> errors;
  std::vector<std::optional<double>> mean_curve;           // per k, over repetitions reaching k
};

/// Shuffles all generated LFs with the repetition seed and records AUC as
/// they are applied one by one. Writes config.json and curve.csv.
inline CurveReport run_additive_curve(const RunConfig& config,
                                      const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                                      std::ostream* log = nullptr) {
  namespace fs = std::filesystem;
  config.validate();
  const Dataset dataset = detail::load_for_experiment(config);
  const std::vector<std::string> intents(dataset.intents().begin(), dataset.intents().end());
  const detail::ProviderSource providers(config);
  ProgressLog progress(log);

  CurveReport report;
  report.config = config;
  report.curves.resize(config.repetitions);
  report.errors.resize(config.repetitions);
  parallel_for(config.repetitions, config.threads, [&](std::size_t rep) {
    const auto seed = repetition_seed(config.base_seed, rep);
    try {
      auto data = detail::prepare_repetition(dataset, config, seed);
      auto provider = providers.for_repetition(data);
      auto result = run_pipeline(data.labeled, data.unlabeled, *provider,
                                 detail::settings_for(config, *provider), seed);
      const Dataset eval = detail::augmented_eval(data.eval, data.unlabeled_gold, result.grouping.leftovers);
      const auto matrix = apply_lfs(result.candidates, eval);
      report.curves[rep] = additive_curve(matrix, shuffled_order(result.candidates.size(), derive_seed(seed, "curve")),
                                          gold_of(eval), intents, config.auc_averaging);
    } catch (const std::exception& e) {
      report.errors[rep] = e.what();
      progress.line("rep " + std::to_string(rep) + " failed: " + e.what());
    }
  });

  std::size_t longest = 0;
  for (const auto& c : report.curves) longest = std::max(longest, c.size());
  for (std::size_t k = 0; k < longest; ++k) {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& c : report.curves)
      if (k < c.size() && c[k]) {
        sum += *c[k];
        ++n;
      }
    report.mean_curve.push_back(n ? std::optional(sum / static_cast<double>(n)) : std::nullopt);
  }

  if (out_dir) {
    fs::create_directories(*out_dir);
    detail::write_file(*out_dir / "config.json", config_to_json(config).dump(2) + "\n");
    std::ostringstream curve;
    curve << "repetition,k,auc\n";
    for (std::size_t rep = 0; rep < report.curves.size(); ++rep)
      for (std::size_t k = 0; k < report.curves[rep].size(); ++k)
        curve << rep << ',' << (k + 1) << ',' << format_optional(report.curves[rep][k]) << '\n';
    for (std::size_t k = 0; k < report.mean_curve.size(); ++k)
      curve << "mean," << (k + 1) << ',' << format_optional(report.mean_curve[k]) << '\n';
    detail::write_file(*out_dir / "curve.csv", curve.str());
  }
  return report;
}

// ---------------------------------------------------------------------------
// Threshold sweep

enum class SweepTarget { grouper, generator, pruner, holdout };

inline SweepTarget sweep_target_from_string(const std::string& s) {
  if (s == "grouper") return SweepTarget::grouper;
  if (s == "generator") return SweepTarget::generator;
  if (s == "pruner") return SweepTarget::pruner;
  if (s == "holdout") return SweepTarget::holdout;
  throw ValidationError("unknown sweep target: " + s);
}

struct SweepPoint {
  double value = 0;
  std::optional<double> mean_auc, mean_f1;
};

/// Varies one setting over 0.1, 0.2, ..., 1.0 (holdout stops at 0.9) and
/// records rq1 means for each value.
inline std::vector<SweepPoint> run_sweep(const RunConfig& base, SweepTarget target,
                                         const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                                         std::ostream* log = nullptr) {
  std::vector<SweepPoint> points;
  for (int step = 1; step <= 10; ++step) {
    const double v = step / 10.0;
    if (target == SweepTarget::holdout && step == 10) break;
    RunConfig c = base;
    switch (target) {
      case SweepTarget::grouper: c.grouper_threshold = v; break;
      case SweepTarget::generator: c.generator_threshold = v; break;
      case SweepTarget::pruner: c.pruner_threshold = v; break;
      case SweepTarget::holdout: c.holdout = v; break;
    }
    auto r = run_rq1(c, std::nullopt, log);
    points.push_back({v, r.mean_auc, r.mean_f1});
  }
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    detail::write_file(*out_dir / "config.json", config_to_json(base).dump(2) + "\n");
    std::ostringstream csv;
    csv << "value,mean_auc,mean_weighted_f1\n";
    for (const auto& p : points)
      csv << format_number(p.value) << ',' << format_optional(p.mean_auc) << ',' << format_optional(p.mean_f1)
          << '\n';
    detail::write_file(*out_dir / "sweep.csv", csv.str());
  }
  return points;
}

}  // namespace lfgen
