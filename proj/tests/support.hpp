#pragma once

// Random model inputs shared by the unit tests and the acceptance binary.

#include <cmath>
#include <cstddef>
#include <string>
#include <tuple>
#include <vector>

#include "cocosum/model/model.hpp"
#include "cocosum/sbt.hpp"
#include "cocosum/rng.hpp"

namespace cocosum::testing {

inline ModelConfig small_config(std::size_t dim = 4) {
  ModelConfig c;
  c.code_vocab = 20;
  c.sbt_vocab = 20;
  c.summary_vocab = 15;
  c.embedding_dim = dim;
  c.gru_hidden = dim + 1;
  c.class_embedding_dim = dim + 2;
  c.mrgnn_hidden = dim;
  c.dropout = 0.0;
  return c;
}

inline std::vector<std::size_t> random_ids(Rng& rng, std::size_t n, std::size_t vocab) {
  std::vector<std::size_t> ids(n);
  for (auto& id : ids) id = Vocab::kNumSpecials + uniform_index(rng, vocab - Vocab::kNumSpecials);
  return ids;
}

using EdgeList = std::vector<std::tuple<std::size_t, std::size_t, Relation>>;

inline EdgeList random_edges(Rng& rng, std::size_t nodes) {
  EdgeList edges;
  const std::size_t count = uniform_index(rng, 2 * nodes + 1);
  for (std::size_t e = 0; e < count; ++e)
    edges.emplace_back(uniform_index(rng, nodes), uniform_index(rng, nodes), kRelations[uniform_index(rng, 4)]);
  return edges;
}

/// A random instance: 1-8 code tokens, 1-12 SBT tokens, 0-5 summary tokens
/// and a graph of 1-max_nodes classes with random edges.
inline ModelInput random_input(Rng& rng, const ModelConfig& c, std::size_t max_nodes = 10) {
  ModelInput in;
  in.code_ids = random_ids(rng, 1 + uniform_index(rng, 8), c.code_vocab);
  in.sbt_ids = random_ids(rng, 1 + uniform_index(rng, 12), c.sbt_vocab);
  in.summary_ids = random_ids(rng, uniform_index(rng, 6), c.summary_vocab);
  const std::size_t n = 1 + uniform_index(rng, max_nodes);
  for (std::size_t i = 0; i < n; ++i) {
    in.node_names.push_back("C" + std::to_string(i));
    in.node_name_ids.push_back(random_ids(rng, 1 + uniform_index(rng, 3), c.code_vocab));
  }
  in.adjacency = RelationalAdjacency::build(n, random_edges(rng, n));
  in.enclosing = uniform_index(rng, n);
  return in;
}

/// Entries in [0, 1] and a sum within tol of 1.
inline bool on_simplex(const std::vector<double>& v, double tol = 1e-6) {
  if (v.empty()) return false;
  double total = 0.0;
  for (double x : v) {
    if (!(x >= 0.0 && x <= 1.0)) return false;
    total += x;
  }
  return std::abs(total - 1.0) <= tol;
}

/// Relabels node i of `in` as perm[i].
inline ModelInput permute_nodes(const ModelInput& in, const std::vector<std::size_t>& perm) {
  const std::size_t n = in.node_names.size();
  ModelInput out = in;
  for (std::size_t i = 0; i < n; ++i) {
    out.node_names[perm[i]] = in.node_names[i];
    out.node_name_ids[perm[i]] = in.node_name_ids[i];
  }
  std::vector<std::tuple<std::size_t, std::size_t, Relation>> edges;
  for (auto r : kRelations) {
    const auto& lists = in.adjacency.neighbors[static_cast<std::size_t>(r)];
    for (std::size_t i = 0; i < n; ++i)
      for (auto j : lists[i]) edges.emplace_back(perm[i], perm[j], r);
  }
  out.adjacency = RelationalAdjacency::build(n, edges);
  out.enclosing = perm[in.enclosing];
  return out;
}

/// Graph encoder output for every node, without dropout.
inline std::vector<std::vector<double>> node_outputs(const Model<double>& model, const ModelInput& in) {
  Tape<double> tape;
  tape.set_recording(false);
  std::vector<Tensor<double>> features;
  for (std::size_t i = 0; i < in.node_names.size(); ++i)
    features.push_back(model.class_semantic_embedding(tape, in.node_names[i], in.node_name_ids[i]));
  const auto out = mrgnn_forward(tape, in.adjacency, features, model.params().mrgnn, model.config().leaky_relu_slope);
  std::vector<std::vector<double>> result;
  for (const auto& t : out) result.push_back(to_doubles(t));
  return result;
}

inline AstNode random_tree(Rng& rng, std::size_t max_nodes, const std::vector<std::string>& labels) {
  const std::size_t n = 1 + uniform_index(rng, max_nodes);
  // Random recursive tree: node i attaches to a uniformly chosen earlier node.
  std::vector<std::size_t> parent(n, 0);
  for (std::size_t i = 1; i < n; ++i) parent[i] = uniform_index(rng, i);
  std::vector<AstNode> nodes(n);
  for (auto& node : nodes) node.label = labels[uniform_index(rng, labels.size())];
  for (std::size_t i = n; i-- > 1;) nodes[parent[i]].children.insert(nodes[parent[i]].children.begin(), nodes[i]);
  return nodes[0];
}

}  // namespace cocosum::testing
