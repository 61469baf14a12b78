#pragma once

// Labeling functions: rules that vote an intent for a query or abstain.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "lfgen/corpus.hpp"
#include "lfgen/ml/models.hpp"

namespace lfgen {

enum class LfType { contains_word, entity, entity_word, ml };

inline std::string to_string(LfType t) {
  switch (t) {
    case LfType::contains_word: return "ContainsWordLabeller";
    case LfType::entity: return "EntityLabeller";
    case LfType::entity_word: return "EntityWordLabeller";
    case LfType::ml: return "MLLabeller";
  }
  return "";
}

inline LfType lf_type_from_string(const std::string& s) {
  if (s == "ContainsWordLabeller") return LfType::contains_word;
  if (s == "EntityLabeller") return LfType::entity;
  if (s == "EntityWordLabeller") return LfType::entity_word;
  if (s == "MLLabeller") return LfType::ml;
  throw ValidationError("unknown lf_type: " + s);
}

/// A trained classifier together with the feature space and label names it
/// was trained on.
struct MlModel {
  Vocabulary vocabulary;
  std::vector<std::string> intents;  // class index → intent
  std::size_t training_size = 0;
  std::shared_ptr<const ml::Classifier> classifier;

  ml::SparseRow featurize(const std::string& text) const {
    ml::SparseRow row;
    for (const auto& [col, count] : vectorize(text, vocabulary))
      row.emplace_back(col, static_cast<double>(count));
    return row;
  }

  const std::string& predict(const std::string& text) const {
    return intents.at(classifier->predict(featurize(text)));
  }

  nlohmann::json to_json() const {
    return {{"vocabulary", vocabulary.tokens()},
            {"intents", intents},
            {"training_size", training_size},
            {"classifier", classifier->to_json()}};
  }

  static MlModel from_json(const nlohmann::json& j) {
    MlModel m;
    m.vocabulary = Vocabulary(j.at("vocabulary").get<std::vector<std::string>>());
    m.intents = j.at("intents").get<std::vector<std::string>>();
    m.training_size = j.at("training_size").get<std::size_t>();
    m.classifier = ml::classifier_from_json(j.at("classifier"));
    return m;
  }
};

/// Lowercased token set of a query, computed once per query when many LFs
/// are applied to it.
struct QueryView {
  const Query* query;
  std::unordered_set<std::string> tokens;
  std::unordered_set<std::string> entity_types;

  explicit QueryView(const Query& q) : query(&q) {
    for (auto& t : tokenize(q.text)) tokens.insert(std::move(t));
    for (const auto& e : q.entities) entity_types.insert(e.entity_type);
  }
};

struct LabelingFunction {
  std::string name;
  LfType type = LfType::contains_word;
  std::optional<std::string> class_intent;  // absent for MLLabeller
  std::vector<std::string> unique_words;
  std::vector<std::string> unique_entities;
  std::shared_ptr<const MlModel> model;
  std::size_t support = 0;

  void check() const {
    const bool words = !unique_words.empty();
    const bool ents = !unique_entities.empty();
    bool ok = false;
    switch (type) {
      case LfType::contains_word: ok = words && !ents && class_intent; break;
      case LfType::entity: ok = ents && !words && class_intent; break;
      case LfType::entity_word: ok = words && ents && class_intent; break;
      case LfType::ml: ok = model && !class_intent; break;
    }
    if (!ok) throw ValidationError("malformed labeling function " + name);
  }

  /// Fires on any listed word (word LFs), any listed entity type (entity
  /// LFs), or any listed word together with any listed entity type.
  std::optional<std::string> vote(const QueryView& view) const {
    auto any_word = [&] {
      return std::any_of(unique_words.begin(), unique_words.end(),
                         [&](const std::string& w) { return view.tokens.count(w) > 0; });
    };
    auto any_entity = [&] {
      return std::any_of(unique_entities.begin(), unique_entities.end(),
                         [&](const std::string& e) { return view.entity_types.count(e) > 0; });
    };
    switch (type) {
      case LfType::contains_word:
        if (any_word()) return class_intent;
        break;
      case LfType::entity:
        if (any_entity()) return class_intent;
        break;
      case LfType::entity_word:
        if (any_word() && any_entity()) return class_intent;
        break;
      case LfType::ml:
        return model->predict(view.query->text);
    }
    return std::nullopt;
  }

  std::optional<std::string> vote(const Query& q) const { return vote(QueryView(q)); }
};

/// Number of `generation` queries evidencing the LF: queries of the target
/// intent on which it fires. ML LFs count their training set.
inline std::size_t compute_support(const LabelingFunction& lf, const Dataset& generation) {
  if (lf.type == LfType::ml) return lf.model ? lf.model->training_size : 0;
  std::size_t n = 0;
  for (const auto& q : generation)
    if (q.intent == lf.class_intent && lf.vote(q)) ++n;
  return n;
}

/// JSON form of an LF set. Empty word/entity lists are omitted; ML entries
/// reference their model file through "model" instead of a class intent.
/// `model_path(lf)` decides where each model lives; the caller writes it.
template <typename ModelPath>
nlohmann::ordered_json lfs_to_json(const std::vector<LabelingFunction>& lfs, ModelPath&& model_path) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& lf : lfs) {
    nlohmann::ordered_json j;
    j["lf_name"] = lf.name;
    if (lf.class_intent) j["class_intent"] = *lf.class_intent;
    if (!lf.unique_words.empty()) j["unique_words"] = lf.unique_words;
    if (!lf.unique_entities.empty()) j["unique_entities"] = lf.unique_entities;
    if (lf.type == LfType::ml) j["model"] = model_path(lf);
    j["lf_type"] = to_string(lf.type);
    arr.push_back(std::move(j));
  }
  return arr;
}

inline std::string model_file_name(const LabelingFunction& lf) {
  std::string safe = lf.name;
  for (char& c : safe)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') c = '_';
  return "models/" + safe + ".json";
}

/// Writes `lfs.json`-style output at `path` plus one model file per ML LF
/// under `<dir of path>/models/`.
inline void save_lfs(const std::string& path, const std::vector<LabelingFunction>& lfs) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(path).parent_path();
  auto json = lfs_to_json(lfs, [&](const LabelingFunction& lf) {
    const std::string rel = model_file_name(lf);
    fs::create_directories((dir / rel).parent_path());
    std::ofstream m(dir / rel);
    if (!m) throw Error("cannot write model file: " + (dir / rel).string());
    m << lf.model->to_json().dump() << '\n';
    return rel;
  });
  std::ofstream out(path);
  if (!out) throw Error("cannot write LF file: " + path);
  out << json.dump(2) << '\n';
}

/// Reads an LF file; model references are resolved relative to its directory.
inline std::vector<LabelingFunction> load_lfs(const std::string& path) {
  namespace fs = std::filesystem;
  std::ifstream in(path);
  if (!in) throw Error("cannot open LF file: " + path);
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), 0);
  }
  if (!arr.is_array()) throw ValidationError("LF file must hold a JSON array");
  std::vector<LabelingFunction> lfs;
  std::unordered_set<std::string> names;
  for (const auto& j : arr) {
    LabelingFunction lf;
    try {
      lf.name = j.at("lf_name").get<std::string>();
      lf.type = lf_type_from_string(j.at("lf_type").get<std::string>());
      if (j.contains("class_intent")) lf.class_intent = j["class_intent"].get<std::string>();
      if (j.contains("unique_words")) lf.unique_words = j["unique_words"].get<std::vector<std::string>>();
      if (j.contains("unique_entities"))
        lf.unique_entities = j["unique_entities"].get<std::vector<std::string>>();
      if (lf.type == LfType::ml) {
        const fs::path model_path = fs::path(path).parent_path() / j.at("model").get<std::string>();
        std::ifstream m(model_path);
        if (!m) throw Error("cannot open model file: " + model_path.string());
        lf.model = std::make_shared<const MlModel>(MlModel::from_json(nlohmann::json::parse(m)));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("bad LF entry: ") + e.what());
    }
    lf.check();
    if (!names.insert(lf.name).second) throw ValidationError("duplicate lf_name: " + lf.name);
    if (lf.type == LfType::ml) lf.support = lf.model->training_size;
    lfs.push_back(std::move(lf));
  }
  return lfs;
}

}  // namespace lfgen
