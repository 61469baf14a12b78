#pragma once

// Sentence embedding providers used for semantic similarity.
//
// LexicalProvider is the offline default: TF-IDF weighted token unigrams and
// in-token character trigrams, hashed into a fixed number of buckets and
// L2-normalized. PrecomputedProvider serves vectors from a file keyed by
// trimmed query text, as written by the external embedding tool.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "lfgen/corpus.hpp"
#include "lfgen/corpus_io.hpp"
#include "lfgen/error.hpp"
#include "lfgen/random.hpp"

namespace lfgen {

struct Embedding {
  std::vector<double> values;

  std::size_t dimension() const noexcept { return values.size(); }
  friend bool operator==(const Embedding&, const Embedding&) = default;
};

/// dot(a,b) / (|a||b|); zero when either norm is zero.
inline double cosine(const Embedding& a, const Embedding& b) {
  if (a.dimension() != b.dimension())
    throw ValidationError("embedding dimension mismatch: " + std::to_string(a.dimension()) +
                          " vs " + std::to_string(b.dimension()));
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  // sqrt(na * nb) keeps self-similarity exactly 1.
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::string name() const = 0;
  virtual std::size_t dimension() const = 0;
  /// Deterministic; empty (after trimming) text maps to the zero vector.
  virtual Embedding embed(std::string_view text) const = 0;
  /// Grouper similarity threshold suited to this provider.
  virtual double default_threshold() const = 0;
};

struct LexicalOptions {
  std::size_t dimension = 1024;
  bool char_trigrams = true;
};

class LexicalProvider final : public EmbeddingProvider {
 public:
  /// IDF weights are fitted on `corpus`; features never seen there get the
  /// maximum IDF.
  explicit LexicalProvider(std::span<const std::string> corpus, LexicalOptions options = {})
      : options_(options), documents_(corpus.size()) {
    if (options_.dimension == 0) throw ValidationError("lexical dimension must be positive");
    for (const auto& text : corpus) {
      auto feats = features(text);
      for (const auto& [f, count] : feats) ++document_frequency_[f];
    }
  }

  std::string name() const override { return "lexical"; }
  std::size_t dimension() const override { return options_.dimension; }
  double default_threshold() const override { return 0.55; }

  /// Feature string → term frequency for `text`.
  std::unordered_map<std::string, double> features(std::string_view text) const {
    std::unordered_map<std::string, double> out;
    for (const auto& tok : tokenize(text)) {
      out["w:" + tok] += 1.0;
      if (!options_.char_trigrams) continue;
      const std::string padded = "<" + tok + ">";
      for (std::size_t i = 0; i + 3 <= padded.size(); ++i) out["c:" + padded.substr(i, 3)] += 1.0;
    }
    return out;
  }

  std::size_t bucket(std::string_view feature) const {
    return static_cast<std::size_t>(fnv1a(feature) % options_.dimension);
  }

  double idf(const std::string& feature) const {
    auto it = document_frequency_.find(feature);
    double df = it == document_frequency_.end() ? 0.0 : static_cast<double>(it->second);
    return std::log((1.0 + static_cast<double>(documents_)) / (1.0 + df)) + 1.0;
  }

  Embedding embed(std::string_view text) const override {
    Embedding e{std::vector<double>(options_.dimension, 0.0)};
    auto feats = features(trim(text));
    // Accumulate in a fixed order so the result is independent of hash-map layout.
    std::vector<std::pair<std::string, double>> sorted(feats.begin(), feats.end());
    std::sort(sorted.begin(), sorted.end());
    for (const auto& [f, tf] : sorted) e.values[bucket(f)] += tf * idf(f);
    double norm = 0;
    for (double v : e.values) norm += v * v;
    if (norm > 0) {
      norm = std::sqrt(norm);
      for (double& v : e.values) v /= norm;
    }
    return e;
  }

 private:
  LexicalOptions options_;
  std::size_t documents_;
  std::unordered_map<std::string, std::size_t> document_frequency_;
};

/// Vectors read from an embeddings file: a `#dim=<D>` header, then one JSON
/// object {"text": ..., "vec": [D numbers]} per line.
class PrecomputedProvider final : public EmbeddingProvider {
 public:
  explicit PrecomputedProvider(std::istream& in) { load(in); }

  explicit PrecomputedProvider(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open embeddings file: " + path);
    load(in);
  }

  std::string name() const override { return "precomputed"; }
  std::size_t dimension() const override { return dimension_; }
  double default_threshold() const override { return 0.8; }
  std::size_t size() const noexcept { return vectors_.size(); }

  bool contains(std::string_view text) const {
    return vectors_.count(std::string(trim(text))) > 0;
  }

  Embedding embed(std::string_view text) const override {
    auto key = std::string(trim(text));
    auto it = vectors_.find(key);
    if (it != vectors_.end()) return it->second;
    if (key.empty()) return Embedding{std::vector<double>(dimension_, 0.0)};
    throw LookupError(key);
  }

 private:
  void load(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
      ++line_no;
      auto t = trim(line);
      if (t.empty()) continue;
      if (!have_header) {
        if (!t.starts_with("#dim=")) throw ParseError("expected #dim=<D> header", line_no);
        try {
          dimension_ = std::stoul(std::string(t.substr(5)));
        } catch (const std::exception&) {
          throw ParseError("bad dimension in header", line_no);
        }
        if (dimension_ == 0) throw ParseError("dimension must be positive", line_no);
        have_header = true;
        continue;
      }
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(t);
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(e.what(), line_no);
      }
      if (!j.is_object() || !j.contains("text") || !j["text"].is_string() || !j.contains("vec") ||
          !j["vec"].is_array())
        throw ParseError("expected {\"text\": string, \"vec\": array}", line_no);
      Embedding e;
      for (const auto& v : j["vec"]) {
        if (!v.is_number()) throw ParseError("non-numeric vector component", line_no);
        double d = v.get<double>();
        if (!std::isfinite(d)) throw ParseError("non-finite vector component", line_no);
        e.values.push_back(d);
      }
      if (e.dimension() != dimension_)
        throw ParseError("vector has " + std::to_string(e.dimension()) + " components, expected " +
                             std::to_string(dimension_),
                         line_no);
      vectors_.insert_or_assign(std::string(trim(j["text"].get<std::string>())), std::move(e));
    }
    if (!have_header) throw ParseError("empty embeddings file", line_no);
  }

  std::size_t dimension_ = 0;
  std::unordered_map<std::string, Embedding> vectors_;
};

}  // namespace lfgen
