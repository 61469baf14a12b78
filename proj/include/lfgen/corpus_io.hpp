#pragma once

// Dataset readers and writers for JSONL and the bracket-markup training
// layout (`- intent:` blocks whose examples mark entities as [value](type)).

#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "lfgen/corpus.hpp"

namespace lfgen {

enum class DatasetFormat { jsonl, bracket };

inline std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

/// Guesses the format from a path suffix: .jsonl/.json → jsonl, else bracket.
inline DatasetFormat format_for_path(const std::string& path) {
  auto ends_with = [&](std::string_view suffix) {
    return path.size() >= suffix.size() &&
           path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  return (ends_with(".jsonl") || ends_with(".json")) ? DatasetFormat::jsonl
                                                     : DatasetFormat::bracket;
}

namespace detail {

inline Query query_from_json(const nlohmann::json& j, std::size_t ordinal, std::size_t line) {
  if (!j.is_object()) throw ParseError("expected a JSON object", line);
  Query q;
  auto text = j.find("text");
  if (text == j.end() || !text->is_string()) throw ParseError("missing string field \"text\"", line);
  q.text = text->get<std::string>();
  if (auto id = j.find("id"); id != j.end() && !id->is_null()) {
    if (!id->is_string()) throw ParseError("\"id\" must be a string", line);
    q.id = id->get<std::string>();
  } else {
    q.id = canonical_id(ordinal);
  }
  if (auto intent = j.find("intent"); intent != j.end() && !intent->is_null()) {
    if (!intent->is_string()) throw ParseError("\"intent\" must be a string or null", line);
    auto name = std::string(trim(intent->get<std::string>()));
    if (!name.empty()) q.intent = std::move(name);
  }
  if (auto ents = j.find("entities"); ents != j.end() && !ents->is_null()) {
    if (!ents->is_array()) throw ParseError("\"entities\" must be an array", line);
    for (const auto& e : *ents) {
      try {
        EntitySpan span;
        span.start = e.at("start").get<std::size_t>();
        span.end = e.at("end").get<std::size_t>();
        span.entity_type = e.at("entity_type").get<std::string>();
        if (auto v = e.find("value"); v != e.end() && !v->is_null())
          span.value = v->get<std::string>();
        else if (span.start < span.end && span.end <= q.text.size())
          span.value = q.text.substr(span.start, span.end - span.start);
        q.entities.push_back(std::move(span));
      } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("bad entity: ") + ex.what(), line);
      }
    }
  }
  return q;
}

/// Splits "[value](type)" markup out of an example line.
inline Query query_from_markup(std::string_view line_text, std::size_t line) {
  Query q;
  std::size_t i = 0;
  while (i < line_text.size()) {
    char c = line_text[i];
    if (c == '[') {
      auto close = line_text.find(']', i + 1);
      if (close != std::string_view::npos && close + 1 < line_text.size() &&
          line_text[close + 1] == '(') {
        auto paren = line_text.find(')', close + 2);
        if (paren == std::string_view::npos) throw ParseError("unterminated entity type", line);
        EntitySpan span;
        span.value = std::string(line_text.substr(i + 1, close - i - 1));
        span.entity_type = std::string(trim(line_text.substr(close + 2, paren - close - 2)));
        span.start = q.text.size();
        q.text += span.value;
        span.end = q.text.size();
        if (span.value.empty()) throw ParseError("empty entity value", line);
        q.entities.push_back(std::move(span));
        i = paren + 1;
        continue;
      }
    }
    q.text.push_back(c);
    ++i;
  }
  return q;
}

}  // namespace detail

inline Dataset parse_jsonl(std::istream& in) {
  std::vector<Query> queries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(e.what(), line_no);
    }
    queries.push_back(detail::query_from_json(j, queries.size(), line_no));
  }
  return Dataset(std::move(queries));
}

inline Dataset parse_bracket(std::istream& in) {
  std::vector<Query> queries;
  std::optional<std::string> intent;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line == "nlu:" || line.starts_with("version:")) continue;
    if (line.starts_with("- intent:")) {
      auto name = trim(line.substr(9));
      if (name.empty()) throw ParseError("empty intent name", line_no);
      intent = std::string(name);
      continue;
    }
    if (line.starts_with("examples:")) {
      if (!intent) throw ParseError("examples before any intent", line_no);
      continue;
    }
    if (line.starts_with("- ")) {
      if (!intent) throw ParseError("example before any intent", line_no);
      Query q = detail::query_from_markup(trim(line.substr(2)), line_no);
      q.id = canonical_id(queries.size());
      q.intent = intent;
      try {
        validate_query(q);
      } catch (const ValidationError& e) {
        throw ParseError(e.what(), line_no);
      }
      queries.push_back(std::move(q));
      continue;
    }
    throw ParseError("unrecognized line: " + std::string(line), line_no);
  }
  return Dataset(std::move(queries));
}

inline Dataset parse_dataset(std::istream& in, DatasetFormat format) {
  return format == DatasetFormat::jsonl ? parse_jsonl(in) : parse_bracket(in);
}

inline Dataset parse_dataset(std::string_view source, DatasetFormat format) {
  std::istringstream in{std::string(source)};
  return parse_dataset(in, format);
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset: " + path);
  return parse_dataset(in, format_for_path(path));
}

inline nlohmann::ordered_json entities_to_json(const std::vector<EntitySpan>& entities) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& e : entities)
    arr.push_back({{"start", e.start}, {"end", e.end}, {"value", e.value},
                   {"entity_type", e.entity_type}});
  return arr;
}

inline nlohmann::ordered_json query_to_json(const Query& q) {
  nlohmann::ordered_json j;
  j["id"] = q.id;
  j["text"] = q.text;
  j["intent"] = q.intent ? nlohmann::ordered_json(*q.intent) : nlohmann::ordered_json(nullptr);
  j["entities"] = entities_to_json(q.entities);
  return j;
}

inline void write_jsonl(std::ostream& out, const Dataset& dataset) {
  for (const auto& q : dataset) out << query_to_json(q).dump() << '\n';
}

/// Example text with entities re-serialized as [value](type).
inline std::string markup(const Query& q) {
  std::string out;
  std::size_t pos = 0;
  for (const auto& e : q.entities) {
    out.append(q.text, pos, e.start - pos);
    out += "[" + e.value + "](" + e.entity_type + ")";
    pos = e.end;
  }
  out.append(q.text, pos, std::string::npos);
  return out;
}

/// Intent blocks in order of first appearance. Unlabeled queries cannot be
/// expressed in this layout and are rejected.
inline void write_bracket(std::ostream& out, const Dataset& dataset) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const Query*>> blocks;
  for (const auto& q : dataset) {
    if (!q.intent) throw ValidationError("query " + q.id + " has no intent");
    auto& block = blocks[*q.intent];
    if (block.empty()) order.push_back(*q.intent);
    block.push_back(&q);
  }
  for (const auto& name : order) {
    out << "- intent: " << name << "\n  examples: |\n";
    for (const Query* q : blocks[name]) out << "    - " << markup(*q) << '\n';
  }
}

inline void write_dataset(std::ostream& out, const Dataset& dataset, DatasetFormat format) {
  if (format == DatasetFormat::jsonl)
    write_jsonl(out, dataset);
  else
    write_bracket(out, dataset);
}

inline void save_dataset(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset: " + path);
  write_dataset(out, dataset, format_for_path(path));
}

}  // namespace lfgen
