// lfgen: generate, prune and apply labeling functions for intent datasets.
//
// Exit status: 0 success, 1 invalid input or configuration, 2 pipeline
// failure. Progress goes to stderr; stdout only carries the summary table.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lfgen/lfgen.hpp"

namespace fs = std::filesystem;
using namespace lfgen;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kPipeline = 2;

struct Options {
  std::string labeled, unlabeled, dataset, lfs, labels, generation, out;
  std::string provider = "lexical";
  std::string embeddings;
  double grouper_threshold = 0;  // 0 = provider default
  double generator_threshold = 0.8;
  double pruner_threshold = 0.7;
  double holdout = 0.4;
  std::string ratios = "0.3,0.2,0.5";
  std::uint64_t seed = 42;
  std::size_t reps = 10;
  unsigned threads = 1;
  bool aggregate_per_intent = false;
  bool paper_literal_ml_train = false;
  bool hard_labels = false;
  std::string auc_averaging = "macro";
  std::string mode;
  std::string sweep_target = "pruner";
};

void print_table(const std::vector<std::pair<std::string, std::string>>& rows) {
  std::size_t width = 0;
  for (const auto& [k, v] : rows) width = std::max(width, k.size());
  for (const auto& [k, v] : rows) std::cout << std::left << std::setw(static_cast<int>(width) + 2) << k << v << '\n';
}

std::string num(double v) { return format_number(v); }
std::string num(const std::optional<double>& v) { return v ? format_number(*v) : "n/a"; }

std::array<double, 3> parse_ratios(const std::string& s) {
  std::array<double, 3> r{};
  std::stringstream in(s);
  std::string part;
  std::size_t i = 0;
  while (std::getline(in, part, ',')) {
    if (i >= 3) throw ValidationError("--ratios takes exactly three values");
    try {
      r[i++] = std::stod(part);
    } catch (const std::exception&) {
      throw ValidationError("bad ratio: " + part);
    }
  }
  if (i != 3) throw ValidationError("--ratios takes exactly three values");
  return r;
}

std::shared_ptr<const EmbeddingProvider> provider_for(const Options& o, const std::vector<std::string>& corpus) {
  if (o.provider == "precomputed") {
    if (o.embeddings.empty()) throw ValidationError("--provider precomputed needs --embeddings");
    auto p = std::make_shared<PrecomputedProvider>(o.embeddings);
    for (const auto& t : corpus)
      if (!trim(t).empty() && !p->contains(t)) throw LookupError(std::string(trim(t)));
    return p;
  }
  if (o.provider != "lexical") throw ValidationError("unknown provider: " + o.provider);
  return std::make_shared<LexicalProvider>(corpus);
}

AucAveraging averaging_of(const Options& o) {
  if (o.auc_averaging == "macro") return AucAveraging::macro;
  if (o.auc_averaging == "weighted") return AucAveraging::weighted;
  throw ValidationError("--auc-averaging must be macro or weighted");
}

RunConfig run_config(const Options& o) {
  RunConfig c;
  c.dataset_path = o.dataset;
  c.provider = o.provider;
  c.embeddings_path = o.embeddings;
  if (o.grouper_threshold > 0) c.grouper_threshold = o.grouper_threshold;
  c.generator_threshold = o.generator_threshold;
  c.pruner_threshold = o.pruner_threshold;
  c.holdout = o.holdout;
  c.ratios = parse_ratios(o.ratios);
  c.repetitions = o.reps;
  c.base_seed = o.seed;
  c.threads = o.threads;
  c.aggregate_per_intent = o.aggregate_per_intent;
  c.paper_literal_ml_train = o.paper_literal_ml_train;
  c.auc_averaging = averaging_of(o);
  c.validate();
  return c;
}

fs::path out_dir(const Options& o) {
  fs::path dir = o.out.empty() ? fs::path(".") : fs::path(o.out);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << s;
}

// ---------------------------------------------------------------------------

int cmd_group(const Options& o) {
  const Dataset labeled = load_dataset(o.labeled);
  Dataset unlabeled = load_dataset(o.unlabeled).without_intents();
  // Files without ids both number their queries from q0001.
  std::set<std::string> seed_ids;
  for (const auto& q : labeled) seed_ids.insert(q.id);
  if (std::any_of(unlabeled.begin(), unlabeled.end(), [&](const Query& q) { return seed_ids.count(q.id); })) {
    std::vector<Query> renamed = unlabeled.queries();
    for (auto& q : renamed) q.id = "u" + q.id;
    unlabeled = Dataset(std::move(renamed));
    std::cerr << "unlabeled ids collide with seed ids; prefixed them with 'u'\n";
  }
  auto provider = provider_for(o, texts_of({&labeled, &unlabeled}));
  const double threshold = o.grouper_threshold > 0 ? o.grouper_threshold : provider->default_threshold();
  std::cerr << "grouping " << unlabeled.size() << " queries against " << labeled.size()
            << " seed queries (threshold " << threshold << ")\n";
  auto result = group(labeled, unlabeled, *provider, threshold, o.threads);
  const auto dir = out_dir(o);
  save_dataset((dir / "expanded.jsonl").string(), result.expanded);
  save_dataset((dir / "leftovers.jsonl").string(), result.leftovers);
  print_table({{"seed", std::to_string(labeled.size())},
               {"adopted", std::to_string(result.assignments.size())},
               {"leftovers", std::to_string(result.leftovers.size())},
               {"expanded", std::to_string(result.expanded.size())},
               {"threshold", num(threshold)}});
  return kOk;
}

int cmd_generate(const Options& o) {
  const Dataset expanded = load_dataset(o.dataset);
  if (!expanded.fully_labeled()) throw ValidationError("generate needs a fully labeled dataset");
  const std::array<double, 2> parts{1.0 - o.holdout, o.holdout};
  if (!(o.holdout > 0 && o.holdout < 1)) throw ValidationError("--holdout must be in (0, 1)");
  auto split = split_by_ratios(expanded, parts, derive_seed(o.seed, "holdout"));
  GeneratorOptions gen;
  gen.threshold = o.generator_threshold;
  gen.aggregate_per_intent = o.aggregate_per_intent;
  std::cerr << "generating LFs from " << split[0].size() << " queries (" << split[1].size() << " held out)\n";
  auto lfs = generate_candidates(split[0], o.paper_literal_ml_train ? expanded : split[0], gen,
                                 derive_seed(o.seed, "generator"), o.threads);
  const auto dir = out_dir(o);
  save_lfs((dir / "lfs.json").string(), lfs);
  save_dataset((dir / "generation.jsonl").string(), split[0]);
  save_dataset((dir / "holdout.jsonl").string(), split[1]);
  std::map<std::string, std::size_t> by_type;
  for (const auto& lf : lfs) ++by_type[to_string(lf.type)];
  std::vector<std::pair<std::string, std::string>> rows{{"generation", std::to_string(split[0].size())},
                                                        {"holdout", std::to_string(split[1].size())}};
  for (const auto& [t, n] : by_type) rows.emplace_back(t, std::to_string(n));
  rows.emplace_back("total", std::to_string(lfs.size()));
  print_table(rows);
  return kOk;
}

int cmd_prune(const Options& o) {
  auto lfs = load_lfs(o.lfs);
  const Dataset holdout = load_dataset(o.dataset);
  std::string gen_path = o.generation;
  if (gen_path.empty()) gen_path = (fs::path(o.lfs).parent_path() / "generation.jsonl").string();
  if (!fs::exists(gen_path))
    throw ValidationError("LF support needs the generation partition: pass --generation");
  const Dataset generation = load_dataset(gen_path);
  for (auto& lf : lfs) lf.support = compute_support(lf, generation);
  const auto qualities = score_lfs(lfs, holdout, o.threads);
  const auto kept = prune(lfs, qualities, o.pruner_threshold);
  const auto dir = out_dir(o);
  write_text(dir / "pruned.json", qualities_to_json(select_qualities(kept, qualities)).dump(2) + "\n");
  write_text(dir / "qualities.json", qualities_to_json(qualities).dump(2) + "\n");
  save_lfs((dir / "pruned_lfs.json").string(), kept);
  print_table({{"candidates", std::to_string(lfs.size())},
               {"retained", std::to_string(kept.size())},
               {"threshold", num(o.pruner_threshold)}});
  return kOk;
}

int cmd_label(const Options& o) {
  const auto lfs = load_lfs(o.lfs);
  const Dataset queries = load_dataset(o.dataset);
  const auto labels = label_queries(lfs, queries, o.threads);
  fs::path path = o.out.empty() ? fs::path("labels.jsonl") : fs::path(o.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ostringstream s;
  write_labels_jsonl(s, labels);
  write_text(path, s.str());
  std::size_t abstained = 0;
  for (const auto& l : labels)
    if (!l.query.intent) ++abstained;
  print_table({{"queries", std::to_string(labels.size())},
               {"labeled", std::to_string(labels.size() - abstained)},
               {"abstained", std::to_string(abstained)},
               {"lfs", std::to_string(lfs.size())}});
  return kOk;
}

int cmd_eval(const Options& o) {
  const Dataset gold_set = load_dataset(o.dataset);
  if (!gold_set.fully_labeled()) throw ValidationError("eval needs gold intents for every query");
  std::map<std::string, std::pair<std::optional<std::string>, std::map<std::string, double>>> predicted;
  {
    std::ifstream in(o.labels);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (trim(line).empty()) continue;
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("id")) throw ParseError("bad label record", n);
      std::optional<std::string> intent;
      if (j.contains("intent") && j["intent"].is_string()) intent = j["intent"].get<std::string>();
      std::map<std::string, double> votes;
      if (j.contains("votes")) votes = j["votes"].get<std::map<std::string, double>>();
      predicted[j["id"].get<std::string>()] = {intent, votes};
    }
  }
  std::vector<std::string> intents(gold_set.intents().begin(), gold_set.intents().end());
  std::vector<std::string> gold;
  std::vector<std::optional<std::string>> pred;
  ScoreTable scores{intents, {}};
  for (const auto& q : gold_set) {
    auto it = predicted.find(q.id);
    if (it == predicted.end()) throw ValidationError("no label for query " + q.id);
    gold.push_back(*q.intent);
    pred.push_back(it->second.first);
    std::vector<double> row(intents.size(), 0.0);
    for (std::size_t c = 0; c < intents.size(); ++c) {
      auto v = it->second.second.find(intents[c]);
      if (v != it->second.second.end()) row[c] = v->second;
    }
    scores.rows.push_back(std::move(row));
  }
  if (o.hard_labels) scores = indicator_scores(pred, intents);
  const auto report = classification_report(gold, pred, &scores, averaging_of(o));
  if (!o.out.empty()) {
    const auto dir = out_dir(o);
    write_text(dir / "metrics.json", report_to_json(report).dump(2) + "\n");
    std::ostringstream csv;
    write_report_csv(csv, report);
    write_text(dir / "metrics.csv", csv.str());
  }
  std::vector<std::pair<std::string, std::string>> rows;
  for (const auto& [intent, m] : report.per_intent)
    rows.emplace_back(intent, "P " + num(m.precision) + "  R " + num(m.recall) + "  F1 " + num(m.f1) +
                                  "  n " + std::to_string(m.support));
  rows.emplace_back("weighted_f1", num(report.weighted_f1));
  rows.emplace_back("auc_ovr", num(report.auc_ovr));
  rows.emplace_back("abstained", std::to_string(report.abstained));
  print_table(rows);
  return kOk;
}

void precheck_embeddings(const RunConfig& c) {
  if (c.provider != "precomputed") return;
  const Dataset d = load_dataset(c.dataset_path);
  PrecomputedProvider p(c.embeddings_path);
  for (const auto& q : d)
    if (!trim(q.text).empty() && !p.contains(q.text)) throw LookupError(std::string(trim(q.text)));
}

int cmd_experiment(const Options& o) {
  const RunConfig c = run_config(o);
  precheck_embeddings(c);
  const fs::path dir = out_dir(o);
  if (o.mode == "rq1") {
    auto r = run_rq1(c, dir, &std::cerr);
    std::size_t failed = 0;
    for (const auto& rep : r.repetitions) failed += rep.error ? 1 : 0;
    print_table({{"repetitions", std::to_string(r.repetitions.size())},
                 {"failed", std::to_string(failed)},
                 {"mean_auc", num(r.mean_auc)},
                 {"mean_weighted_f1", num(r.mean_f1)},
                 {"random_mean_auc", num(r.mean_control_auc)},
                 {"random_mean_weighted_f1", num(r.mean_control_f1)}});
    return failed == r.repetitions.size() ? kPipeline : kOk;
  }
  if (o.mode == "rq2") {
    auto r = run_rq2(c, dir, &std::cerr);
    std::vector<std::pair<std::string, std::string>> rows;
    for (const auto& [name, g] : r.mean_groups)
      rows.emplace_back(name, "high " + num(g.high) + "  medium " + num(g.medium) + "  low " + num(g.low));
    rows.emplace_back("coverage_accuracy_r", num(r.mean_r));
    print_table(rows);
    return kOk;
  }
  if (o.mode == "curve") {
    auto r = run_additive_curve(c, dir, &std::cerr);
    std::vector<std::pair<std::string, std::string>> rows;
    for (std::size_t k = 0; k < r.mean_curve.size(); ++k) rows.emplace_back("k=" + std::to_string(k + 1), num(r.mean_curve[k]));
    print_table(rows);
    return kOk;
  }
  if (o.mode == "sweep") {
    auto points = run_sweep(c, sweep_target_from_string(o.sweep_target), dir, &std::cerr);
    std::vector<std::pair<std::string, std::string>> rows;
    for (const auto& p : points)
      rows.emplace_back(o.sweep_target + "=" + num(p.value), "AUC " + num(p.mean_auc) + "  F1 " + num(p.mean_f1));
    print_table(rows);
    return kOk;
  }
  throw ValidationError("unknown experiment: " + o.mode);
}

int cmd_export(const Options& o) {
  if (o.mode != "rasa") throw ValidationError("unknown export format: " + o.mode);
  const Dataset labeled = load_dataset(o.labels);
  const Dataset seed = o.labeled.empty() ? Dataset() : load_dataset(o.labeled);
  std::ostringstream yaml;
  write_training_yaml(yaml, seed, labeled);
  if (o.out.empty()) {
    std::cout << yaml.str();
  } else {
    fs::path p(o.out);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    write_text(p, yaml.str());
    std::size_t n = 0;
    for (const auto& q : labeled) n += q.intent ? 1 : 0;
    print_table({{"seed", std::to_string(seed.size())}, {"labeled", std::to_string(n)}, {"written", o.out}});
  }
  return kOk;
}

// ---------------------------------------------------------------------------

/// Turns a JSON config object into flags placed before the user's own, so
/// explicit flags override file values (last occurrence wins).
std::vector<std::string> config_args(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ValidationError("config file must hold a JSON object");
  std::vector<std::string> args;
  for (const auto& [key, value] : j.items()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) joined += (joined.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
      args.insert(args.end(), {flag, joined});
    } else if (value.is_string()) {
      args.insert(args.end(), {flag, value.get<std::string>()});
    } else if (!value.is_null()) {
      args.insert(args.end(), {flag, value.dump()});
    }
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    for (std::size_t i = 0; i < args.size(); ++i) {
      std::string path;
      if (args[i] == "--config" && i + 1 < args.size()) {
        path = args[i + 1];
        args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
      } else if (args[i].starts_with("--config=")) {
        path = args[i].substr(9);
        args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      } else {
        continue;
      }
      auto extra = config_args(path);
      const auto at = args.empty() ? args.begin() : args.begin() + 1;
      args.insert(at, extra.begin(), extra.end());
      break;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  }

  Options o;
  CLI::App app{"Generate, prune and apply labeling functions for intent-labeled queries", "lfgen"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  app.footer(
      "Defaults: --grouper-threshold 0.8 (precomputed) / 0.55 (lexical), --generator-threshold 0.8,\n"
      "--pruner-threshold 0.7, --holdout 0.4, --ratios 0.3,0.2,0.5, --reps 10, --seed 42, --threads 1.\n"
      "Any subcommand also accepts --config <file.json> whose keys mirror the flags; flags win.");

  auto add_provider = [&](CLI::App* c) {
    c->add_option("--provider", o.provider, "Similarity backend: lexical or precomputed")
        ->check(CLI::IsMember({"lexical", "precomputed"}));
    c->add_option("--embeddings", o.embeddings, "Precomputed embeddings file")->check(CLI::ExistingFile);
    c->add_option("--grouper-threshold", o.grouper_threshold, "Grouper similarity threshold")
        ->default_str("0.8 precomputed, 0.55 lexical");
  };
  auto add_generation = [&](CLI::App* c) {
    c->add_option("--generator-threshold", o.generator_threshold, "Minimum word/pair exclusivity");
    c->add_option("--holdout", o.holdout, "Fraction of the expanded data held out for pruning");
    c->add_flag("--aggregate-per-intent", o.aggregate_per_intent, "Merge same-intent word and entity LFs");
    c->add_flag("--paper-literal-ml-train", o.paper_literal_ml_train,
                "Train ML LFs on the whole expanded dataset, holdout included");
  };
  auto add_common = [&](CLI::App* c) {
    c->add_option("--seed", o.seed, "Base random seed");
    c->add_option("--threads", o.threads, "Worker thread cap (results do not depend on it)")->check(CLI::PositiveNumber);
    c->add_option("--out", o.out, "Output directory (label/export: output file)");
  };

  auto* group_cmd = app.add_subcommand("group", "Expand a labeled seed with similar unlabeled queries");
  group_cmd->add_option("--labeled", o.labeled, "Labeled seed dataset")->required()->check(CLI::ExistingFile);
  group_cmd->add_option("--unlabeled", o.unlabeled, "Unlabeled query pool")->required()->check(CLI::ExistingFile);
  add_provider(group_cmd);
  add_common(group_cmd);

  auto* generate_cmd = app.add_subcommand("generate", "Generate candidate LFs from an expanded dataset");
  generate_cmd->add_option("--dataset", o.dataset, "Expanded (labeled) dataset")->required()->check(CLI::ExistingFile);
  add_generation(generate_cmd);
  add_common(generate_cmd);

  auto* prune_cmd = app.add_subcommand("prune", "Score candidate LFs on a holdout and prune them");
  prune_cmd->add_option("--lfs", o.lfs, "Candidate LF file")->required()->check(CLI::ExistingFile);
  prune_cmd->add_option("--dataset", o.dataset, "Labeled holdout")->required()->check(CLI::ExistingFile);
  prune_cmd->add_option("--generation", o.generation, "Generation partition (default: next to --lfs)");
  prune_cmd->add_option("--pruner-threshold", o.pruner_threshold, "Minimum LF accuracy (weighted F1)");
  add_common(prune_cmd);

  auto* label_cmd = app.add_subcommand("label", "Label queries by majority vote of LFs");
  label_cmd->add_option("--lfs", o.lfs, "LF file")->required()->check(CLI::ExistingFile);
  label_cmd->add_option("--dataset", o.dataset, "Queries to label")->required()->check(CLI::ExistingFile);
  add_common(label_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "Score labels against gold intents");
  eval_cmd->add_option("--labels", o.labels, "Labels file from `label`")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--dataset", o.dataset, "Gold-labeled dataset")->required()->check(CLI::ExistingFile);
  eval_cmd->add_flag("--hard-labels", o.hard_labels, "Score AUC from hard labels instead of vote fractions");
  eval_cmd->add_option("--auc-averaging", o.auc_averaging, "macro or weighted")->check(CLI::IsMember({"macro", "weighted"}));
  add_common(eval_cmd);

  auto* experiment_cmd = app.add_subcommand("experiment", "Run an experiment protocol: rq1, rq2, curve or sweep");
  experiment_cmd->add_option("mode", o.mode, "rq1 | rq2 | curve | sweep")->required()->check(CLI::IsMember({"rq1", "rq2", "curve", "sweep"}));
  experiment_cmd->add_option("--dataset", o.dataset, "Gold-labeled dataset")->required()->check(CLI::ExistingFile);
  add_provider(experiment_cmd);
  add_generation(experiment_cmd);
  experiment_cmd->add_option("--pruner-threshold", o.pruner_threshold, "Minimum LF accuracy (weighted F1)");
  experiment_cmd->add_option("--ratios", o.ratios, "Labeled,eval,unlabeled split ratios");
  experiment_cmd->add_option("--reps", o.reps, "Repetitions")->check(CLI::PositiveNumber);
  experiment_cmd->add_option("--sweep-target", o.sweep_target, "Setting varied by sweep")
      ->check(CLI::IsMember({"grouper", "generator", "pruner", "holdout"}));
  experiment_cmd->add_option("--auc-averaging", o.auc_averaging, "macro or weighted")->check(CLI::IsMember({"macro", "weighted"}));
  add_common(experiment_cmd);

  auto* export_cmd = app.add_subcommand("export", "Export labeled queries as NLU training data");
  export_cmd->add_option("format", o.mode, "rasa")->required()->check(CLI::IsMember({"rasa"}));
  export_cmd->add_option("--labels", o.labels, "Labels file from `label`")->required()->check(CLI::ExistingFile);
  export_cmd->add_option("--labeled", o.labeled, "Seed dataset to include")->check(CLI::ExistingFile);
  add_common(export_cmd);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*group_cmd) return cmd_group(o);
    if (*generate_cmd) return cmd_generate(o);
    if (*prune_cmd) return cmd_prune(o);
    if (*label_cmd) return cmd_label(o);
    if (*eval_cmd) return cmd_eval(o);
    if (*experiment_cmd) return cmd_experiment(o);
    if (*export_cmd) return cmd_export(o);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const LookupError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kPipeline;
  }
  return kInvalid;
}
