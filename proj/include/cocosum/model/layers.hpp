#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "cocosum/model/params.hpp"
#include "cocosum/rng.hpp"
#include "cocosum/tensor.hpp"
#include "cocosum/uml.hpp"

namespace cocosum {

/// Every attention distribution produced during a forward pass, for
/// inspection and testing.
struct AttentionTrace {
  std::vector<std::vector<double>> inner;     // per (layer, relation, node): over neighbours
  std::vector<std::vector<double>> outer;     // per (layer, node): over the four relations
  std::vector<std::vector<double>> code;      // per decode step: over code states
  std::vector<std::vector<double>> ast;       // per decode step: over SBT states
  std::vector<std::vector<double>> channels;  // per decode step: code, SBT, class name, class graph
};

template <typename T>
std::vector<double> to_doubles(const Tensor<T>& t) {
  return {t.data().begin(), t.data().end()};
}

/// Inverted dropout; inactive when rng is null or p is zero.
template <typename T>
struct Dropout {
  double p = 0.0;
  Rng* rng = nullptr;

  Tensor<T> operator()(Tape<T>& tape, const Tensor<T>& x) const {
    if (!rng || p <= 0.0) return x;
    std::vector<T> mask(x.size());
    const T keep = static_cast<T>(1.0 / (1.0 - p));
    for (auto& m : mask) m = uniform01(*rng) < p ? T{0} : keep;
    return tape.hadamard(x, Tensor<T>::constant(x.shape(), std::move(mask)));
  }
};

template <typename T>
Tensor<T> affine(Tape<T>& tape, const Tensor<T>& w, const Tensor<T>& x, const Tensor<T>& b) {
  return tape.add(tape.matmul(w, x), b);
}

/// One recurrence step:
///   r = sigmoid(W_r x + b_r + U_r h + c_r)
///   z = sigmoid(W_z x + b_z + U_z h + c_z)
///   n = tanh(W_n x + b_n + r o (U_n h + c_n))
///   h' = (1 - z) o n + z o h
template <typename T>
Tensor<T> gru_step(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& h, const GruParams<T>& p) {
  auto reset = tape.sigmoid(
      tape.add(affine(tape, p.reset_in, x, p.reset_in_bias), affine(tape, p.reset_hidden, h, p.reset_hidden_bias)));
  auto update = tape.sigmoid(tape.add(affine(tape, p.update_in, x, p.update_in_bias),
                                      affine(tape, p.update_hidden, h, p.update_hidden_bias)));
  auto cand = tape.tanh(tape.add(affine(tape, p.cand_in, x, p.cand_in_bias),
                                 tape.hadamard(reset, affine(tape, p.cand_hidden, h, p.cand_hidden_bias))));
  // (1 - z) o n + z o h  ==  n + z o (h - n)
  return tape.add(cand, tape.hadamard(update, tape.sub(h, cand)));
}

/// Runs the recurrence over embedded tokens and returns h_1..h_T.
template <typename T>
std::vector<Tensor<T>> gru_forward(Tape<T>& tape, const std::vector<std::size_t>& ids, const Tensor<T>& embedding,
                                   const GruParams<T>& params, Tensor<T> h0, const Dropout<T>& dropout = {}) {
  if (ids.empty()) throw std::invalid_argument("gru_forward: empty token sequence");
  if (h0.empty()) h0 = Tensor<T>::zeros({params.hidden_dim()});
  std::vector<Tensor<T>> states;
  states.reserve(ids.size());
  Tensor<T> h = h0;
  for (auto id : ids) {
    if (id >= embedding.dim(0)) {
      throw std::out_of_range("token id " + std::to_string(id) + " outside embedding table of " +
                              std::to_string(embedding.dim(0)) + " rows");
    }
    h = gru_step(tape, dropout(tape, tape.row(embedding, id)), h, params);
    states.push_back(h);
  }
  return states;
}

/// Mean of the subtoken embeddings, projected to the class embedding size.
template <typename T>
Tensor<T> class_semantic_embed(Tape<T>& tape, const std::vector<std::size_t>& ids, const Tensor<T>& embedding,
                               const Tensor<T>& projection) {
  if (ids.empty()) throw std::invalid_argument("class_semantic_embed: empty class name");
  Tensor<T> total;
  for (auto id : ids) {
    auto e = tape.row(embedding, id);
    total = total.empty() ? e : tape.add(total, e);
  }
  return tape.matmul(projection, tape.scale(total, T{1} / static_cast<T>(ids.size())));
}

/// Neighbour lists per relation over node indices 0..n-1. Every list holds the
/// node itself and its neighbours in both edge directions, sorted.
struct RelationalAdjacency {
  std::size_t num_nodes = 0;
  std::array<std::vector<std::vector<std::size_t>>, kNumRelations> neighbors;

  static RelationalAdjacency build(std::size_t num_nodes,
                                   const std::vector<std::tuple<std::size_t, std::size_t, Relation>>& edges) {
    RelationalAdjacency adj;
    adj.num_nodes = num_nodes;
    for (auto& lists : adj.neighbors) {
      lists.resize(num_nodes);
      for (std::size_t i = 0; i < num_nodes; ++i) lists[i].push_back(i);
    }
    for (const auto& [src, dst, rel] : edges) {
      if (src >= num_nodes || dst >= num_nodes) throw std::out_of_range("edge references a missing node");
      auto& lists = adj.neighbors[static_cast<std::size_t>(rel)];
      lists[src].push_back(dst);
      lists[dst].push_back(src);
    }
    for (auto& lists : adj.neighbors) {
      for (auto& l : lists) {
        std::sort(l.begin(), l.end());
        l.erase(std::unique(l.begin(), l.end()), l.end());
      }
    }
    return adj;
  }

  /// Adjacency of a class graph with nodes indexed in the graph's id order.
  static RelationalAdjacency from_graph(const UmlGraph& g) {
    std::vector<std::tuple<std::size_t, std::size_t, Relation>> edges;
    auto index_of = [&](std::size_t id) {
      auto it = std::lower_bound(g.nodes().begin(), g.nodes().end(), id,
                                 [](const UmlNode& n, std::size_t v) { return n.id < v; });
      return static_cast<std::size_t>(it - g.nodes().begin());
    };
    for (const auto& e : g.edges()) edges.emplace_back(index_of(e.src), index_of(e.dst), e.relation);
    return build(g.nodes().size(), edges);
  }
};

template <typename T>
struct MrgnnState {
  std::vector<Tensor<T>> general;                                   // h^(g) per node
  std::array<std::vector<Tensor<T>>, kNumRelations> per_relation;  // h^(r) per node
};

/// One multi-relational graph layer.
///
/// Inner attention, per relation r and node i over j in N_r(i):
///   alpha_ij = softmax_j LeakyReLU(a_r . [P_r h_i ; P_r h_j] + c_r)
///   h_i^(r)' = LeakyReLU(sum_j alpha_ij M_r h_j^(r))
/// Outer attention, per node over the four relations:
///   beta_r = softmax_r <B h_i^(g), C_r h_i^(r)'>
///   h_i^(g)' = LeakyReLU(sum_r beta_r D_r h_i^(r)')
template <typename T>
MrgnnState<T> mrgnn_layer(Tape<T>& tape, const RelationalAdjacency& adj, const MrgnnState<T>& in,
                          const MrgnnLayerParams<T>& params, T slope, AttentionTrace* trace = nullptr) {
  const std::size_t n = adj.num_nodes;
  if (in.general.size() != n) {
    throw std::invalid_argument("mrgnn_layer: " + std::to_string(in.general.size()) + " node embeddings for " +
                                std::to_string(n) + " nodes");
  }
  for (const auto& rel : in.per_relation) {
    if (rel.size() != n) throw std::invalid_argument("mrgnn_layer: relation embeddings missing for some nodes");
  }
  MrgnnState<T> out;
  for (auto r : kRelations) {
    const auto ri = static_cast<std::size_t>(r);
    const auto& p = params.relations[ri];
    const auto& h = in.per_relation[ri];
    std::vector<Tensor<T>> projected(n), messages(n);
    for (std::size_t j = 0; j < n; ++j) {
      projected[j] = tape.matmul(p.attn_proj, h[j]);
      messages[j] = tape.matmul(p.message, h[j]);
    }
    auto& next = out.per_relation[ri];
    next.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& nbrs = adj.neighbors[ri][i];
      std::vector<Tensor<T>> logits, gathered;
      logits.reserve(nbrs.size());
      gathered.reserve(nbrs.size());
      for (auto j : nbrs) {
        auto score = tape.add(tape.matmul(p.attn_score, tape.concat(projected[i], projected[j])), p.attn_score_bias);
        logits.push_back(tape.leaky_relu(score, slope));
        gathered.push_back(messages[j]);
      }
      auto alpha = tape.softmax(tape.concat(logits));
      if (trace) trace->inner.push_back(to_doubles(alpha));
      next[i] = tape.leaky_relu(tape.weighted_sum(gathered, alpha), slope);
    }
  }
  out.general.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto query = tape.matmul(params.node_align, in.general[i]);
    std::vector<Tensor<T>> scores, values;
    for (auto r : kRelations) {
      const auto ri = static_cast<std::size_t>(r);
      const auto& p = params.relations[ri];
      scores.push_back(tape.dot(query, tape.matmul(p.relation_align, out.per_relation[ri][i])));
      values.push_back(tape.matmul(p.relation_out, out.per_relation[ri][i]));
    }
    auto beta = tape.softmax(tape.concat(scores));
    if (trace) trace->outer.push_back(to_doubles(beta));
    out.general[i] = tape.leaky_relu(tape.weighted_sum(values, beta), slope);
  }
  return out;
}

/// Stacked layers starting from h^(g) = h^(r) = the given node features.
template <typename T>
std::vector<Tensor<T>> mrgnn_forward(Tape<T>& tape, const RelationalAdjacency& adj,
                                     const std::vector<Tensor<T>>& node_features,
                                     const std::vector<MrgnnLayerParams<T>>& layers, T slope,
                                     AttentionTrace* trace = nullptr) {
  MrgnnState<T> state;
  state.general = node_features;
  for (auto& rel : state.per_relation) rel = node_features;
  for (const auto& layer : layers) state = mrgnn_layer(tape, adj, state, layer, slope, trace);
  return state.general;
}

}  // namespace cocosum
