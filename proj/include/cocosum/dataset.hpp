#pragma once

// Raw dataset records, preprocessed summarization instances, and the
// filtering pipeline between them.

#include <cstddef>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cocosum/preprocess.hpp"
#include "cocosum/sbt.hpp"
#include "cocosum/uml.hpp"

namespace cocosum {

struct RawRecord {
  std::string id;
  std::string repo;
  std::string class_name;
  std::string code;
  std::string summary;
  std::string uml_graph_id;
  std::optional<nlohmann::json> ast;  // optional tree in the nested-list format
};

struct SummarizationInstance {
  std::string id;
  std::vector<std::string> code_tokens;
  std::vector<std::string> sbt_tokens;
  std::vector<std::string> class_name_tokens;
  std::vector<std::string> summary_tokens;
  std::string uml_graph_id;
  std::size_t enclosing_class_node_id = 0;

  bool operator==(const SummarizationInstance&) const = default;
};

namespace detail {

inline std::string json_id(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw std::invalid_argument("id must be a string or integer");
}

}  // namespace detail

inline RawRecord raw_record_from_json(const nlohmann::json& j) {
  RawRecord r;
  r.id = detail::json_id(j.at("id"));
  r.repo = j.value("repo", std::string{});
  r.class_name = j.at("class_name").get<std::string>();
  r.code = j.at("code").get<std::string>();
  r.summary = j.at("summary").get<std::string>();
  r.uml_graph_id = detail::json_id(j.at("uml_graph_id"));
  if (j.contains("ast")) r.ast = j.at("ast");
  return r;
}

inline nlohmann::json instance_to_json(const SummarizationInstance& s) {
  return {{"id", s.id},
          {"code_tokens", s.code_tokens},
          {"sbt_tokens", s.sbt_tokens},
          {"class_name_tokens", s.class_name_tokens},
          {"summary_tokens", s.summary_tokens},
          {"uml_graph_id", s.uml_graph_id},
          {"enclosing_class_node_id", s.enclosing_class_node_id}};
}

inline SummarizationInstance instance_from_json(const nlohmann::json& j) {
  SummarizationInstance s;
  s.id = detail::json_id(j.at("id"));
  s.code_tokens = j.at("code_tokens").get<std::vector<std::string>>();
  s.sbt_tokens = j.at("sbt_tokens").get<std::vector<std::string>>();
  s.class_name_tokens = j.at("class_name_tokens").get<std::vector<std::string>>();
  s.summary_tokens = j.at("summary_tokens").get<std::vector<std::string>>();
  s.uml_graph_id = detail::json_id(j.at("uml_graph_id"));
  s.enclosing_class_node_id = j.at("enclosing_class_node_id").get<std::size_t>();
  return s;
}

inline void save_instances(const std::vector<SummarizationInstance>& items, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write instance file " + path);
  for (const auto& s : items) out << instance_to_json(s).dump() << '\n';
}

inline std::vector<SummarizationInstance> load_instances(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read instance file " + path);
  std::vector<SummarizationInstance> items;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      items.push_back(instance_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed instance: " + e.what());
    }
  }
  return items;
}

/// Per-rule drop counts of the preprocessing filter.
struct PreprocessStats {
  std::size_t read = 0;
  std::size_t kept = 0;
  std::map<std::string, std::size_t> dropped;  // reason -> count

  nlohmann::json to_json() const { return {{"read", read}, {"kept", kept}, {"dropped", dropped}}; }
};

inline constexpr const char* kDropMalformed = "malformed record";
inline constexpr const char* kDropMissingGraph = "missing graph";
inline constexpr const char* kDropMissingClass = "missing class node";
inline constexpr const char* kDropShortSummary = "short summary";
inline constexpr const char* kDropEmptyCode = "empty code";

using GraphLookup = std::function<const UmlGraph*(const std::string& graph_id)>;

/// Applies the record filters and token preprocessing. Returns nothing and
/// counts the reason when a record is dropped.
inline std::optional<SummarizationInstance> preprocess_record(const RawRecord& raw, const GraphLookup& graphs,
                                                              PreprocessStats& stats) {
  auto drop = [&](const char* reason) -> std::optional<SummarizationInstance> {
    ++stats.dropped[reason];
    return std::nullopt;
  };
  const UmlGraph* graph = graphs(raw.uml_graph_id);
  if (!graph) return drop(kDropMissingGraph);
  const UmlNode* node = graph->find_by_name(simple_class_name(raw.class_name));
  if (!node) return drop(kDropMissingClass);

  SummarizationInstance s;
  s.summary_tokens = preprocess_summary(raw.summary);
  if (s.summary_tokens.empty()) return drop(kDropShortSummary);
  s.code_tokens = preprocess_code_text(raw.code);
  if (s.code_tokens.empty()) return drop(kDropEmptyCode);
  AstNode tree;
  try {
    tree = raw.ast ? ast_from_json(*raw.ast) : flat_ast(s.code_tokens);
  } catch (const std::exception&) {
    return drop(kDropMalformed);
  }
  lowercase_labels(tree);
  s.sbt_tokens = sbt_flatten(tree);
  s.class_name_tokens = normalize_class_name(raw.class_name);
  if (s.class_name_tokens.empty()) return drop(kDropMissingClass);
  s.id = raw.id;
  s.uml_graph_id = raw.uml_graph_id;
  s.enclosing_class_node_id = node->id;
  ++stats.kept;
  return s;
}

}  // namespace cocosum
