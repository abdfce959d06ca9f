#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

namespace cocosum {

enum class Relation : std::uint8_t { realization = 0, generalization = 1, dependency = 2, association = 3 };

inline constexpr std::size_t kNumRelations = 4;
inline constexpr std::array<Relation, kNumRelations> kRelations = {Relation::realization, Relation::generalization,
                                                                   Relation::dependency, Relation::association};

inline std::string_view relation_name(Relation r) {
  switch (r) {
    case Relation::realization: return "REALIZATION";
    case Relation::generalization: return "GENERALIZATION";
    case Relation::dependency: return "DEPENDENCY";
    case Relation::association: return "ASSOCIATION";
  }
  return "?";
}

/// Accepts the canonical names and UMLGraph's IMPLEMENTS / EXTENDS / DEPEND / ASSOC.
inline Relation parse_relation(std::string_view name) {
  if (name == "REALIZATION" || name == "IMPLEMENTS") return Relation::realization;
  if (name == "GENERALIZATION" || name == "EXTENDS") return Relation::generalization;
  if (name == "DEPENDENCY" || name == "DEPEND") return Relation::dependency;
  if (name == "ASSOCIATION" || name == "ASSOC") return Relation::association;
  throw std::invalid_argument("unknown relation type: " + std::string(name));
}

struct UmlNode {
  std::size_t id = 0;
  std::string name;
  std::vector<std::string> name_tokens;
  bool operator==(const UmlNode&) const = default;
};

struct UmlEdge {
  std::size_t src = 0;
  std::size_t dst = 0;
  Relation relation = Relation::dependency;
  auto operator<=>(const UmlEdge&) const = default;
};

/// Directed multi-relational class graph. Nodes are kept sorted by id and
/// edges sorted and unique.
class UmlGraph {
 public:
  UmlGraph() = default;

  void add_node(UmlNode node) {
    if (find(node.id)) throw std::invalid_argument("duplicate node id " + std::to_string(node.id));
    auto pos = std::lower_bound(nodes_.begin(), nodes_.end(), node.id,
                                [](const UmlNode& n, std::size_t id) { return n.id < id; });
    nodes_.insert(pos, std::move(node));
  }

  /// Returns false (and adds nothing) for a duplicate triple.
  bool add_edge(UmlEdge edge) {
    if (!find(edge.src) || !find(edge.dst)) {
      throw std::invalid_argument("edge " + std::to_string(edge.src) + "->" + std::to_string(edge.dst) +
                                  " references a missing node");
    }
    auto pos = std::lower_bound(edges_.begin(), edges_.end(), edge);
    if (pos != edges_.end() && *pos == edge) return false;
    edges_.insert(pos, edge);
    return true;
  }

  const std::vector<UmlNode>& nodes() const { return nodes_; }
  const std::vector<UmlEdge>& edges() const { return edges_; }

  const UmlNode* find(std::size_t id) const {
    auto pos = std::lower_bound(nodes_.begin(), nodes_.end(), id,
                                [](const UmlNode& n, std::size_t v) { return n.id < v; });
    return (pos != nodes_.end() && pos->id == id) ? &*pos : nullptr;
  }

  const UmlNode* find_by_name(std::string_view name) const {
    for (const auto& n : nodes_)
      if (n.name == name) return &n;
    return nullptr;
  }

  std::size_t edge_count(Relation r) const {
    return static_cast<std::size_t>(
        std::count_if(edges_.begin(), edges_.end(), [r](const UmlEdge& e) { return e.relation == r; }));
  }

  bool operator==(const UmlGraph&) const = default;

 private:
  std::vector<UmlNode> nodes_;
  std::vector<UmlEdge> edges_;
};

inline nlohmann::json graph_to_json(const UmlGraph& g) {
  nlohmann::json j;
  j["nodes"] = nlohmann::json::array();
  for (const auto& n : g.nodes()) j["nodes"].push_back({{"id", n.id}, {"name", n.name}, {"name_tokens", n.name_tokens}});
  j["edges"] = nlohmann::json::array();
  for (const auto& e : g.edges())
    j["edges"].push_back({{"src", e.src}, {"dst", e.dst}, {"relation", relation_name(e.relation)}});
  return j;
}

inline UmlGraph graph_from_json(const nlohmann::json& j) {
  UmlGraph g;
  for (const auto& n : j.at("nodes"))
    g.add_node({n.at("id").get<std::size_t>(), n.at("name").get<std::string>(),
                n.at("name_tokens").get<std::vector<std::string>>()});
  for (const auto& e : j.at("edges"))
    g.add_edge({e.at("src").get<std::size_t>(), e.at("dst").get<std::size_t>(),
                parse_relation(e.at("relation").get<std::string>())});
  return g;
}

inline void save_graph(const UmlGraph& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write graph file " + path);
  out << graph_to_json(g).dump(1) << '\n';
}

inline UmlGraph load_graph(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read graph file " + path);
  try {
    return graph_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed graph file " + path + ": " + e.what());
  }
}

/// Induced subgraph of all nodes within `radius` hops of `center`, ignoring
/// edge direction. Node ids are preserved.
inline UmlGraph subgraph_for_method(const UmlGraph& graph, std::size_t center, std::size_t radius) {
  if (!graph.find(center)) throw std::out_of_range("unknown class node id " + std::to_string(center));
  std::map<std::size_t, std::vector<std::size_t>> adjacent;
  for (const auto& e : graph.edges()) {
    adjacent[e.src].push_back(e.dst);
    adjacent[e.dst].push_back(e.src);
  }
  std::map<std::size_t, std::size_t> hops{{center, 0}};
  std::queue<std::size_t> frontier;
  frontier.push(center);
  while (!frontier.empty()) {
    const std::size_t v = frontier.front();
    frontier.pop();
    if (hops[v] == radius) continue;
    for (auto w : adjacent[v]) {
      if (hops.emplace(w, hops[v] + 1).second) frontier.push(w);
    }
  }
  UmlGraph sub;
  for (const auto& n : graph.nodes())
    if (hops.count(n.id)) sub.add_node(n);
  for (const auto& e : graph.edges())
    if (hops.count(e.src) && hops.count(e.dst)) sub.add_edge(e);
  return sub;
}

}  // namespace cocosum
