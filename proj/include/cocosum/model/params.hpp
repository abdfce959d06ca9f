#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cocosum/model/config.hpp"
#include "cocosum/rng.hpp"
#include "cocosum/tensor.hpp"
#include "cocosum/uml.hpp"

namespace cocosum {

/// Ordered registry of named trainable arrays.
template <typename T>
class ParamStore {
 public:
  enum class Init { glorot, zeros };

  Tensor<T> add(const std::string& name, Shape shape, Init init, Rng& rng) {
    if (index_.count(name)) throw std::invalid_argument("duplicate parameter name " + name);
    std::vector<T> values(shape_size(shape), T{0});
    if (init == Init::glorot) {
      const double fan_out = static_cast<double>(shape.front());
      const double fan_in = shape.size() > 1 ? static_cast<double>(shape[1]) : 1.0;
      const double bound = std::sqrt(6.0 / (fan_in + fan_out));
      for (auto& v : values) v = static_cast<T>(uniform(rng, -bound, bound));
    }
    auto t = Tensor<T>::parameter(std::move(shape), std::move(values));
    index_.emplace(name, entries_.size());
    entries_.emplace_back(name, t);
    return t;
  }

  const std::vector<std::pair<std::string, Tensor<T>>>& entries() const { return entries_; }

  std::vector<Tensor<T>> tensors() const {
    std::vector<Tensor<T>> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.second);
    return out;
  }

  Tensor<T> get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("unknown parameter " + name);
    return entries_[it->second].second;
  }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  std::size_t size() const { return entries_.size(); }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.second.size();
    return n;
  }

  void zero_grad() {
    for (auto& e : entries_) e.second.zero_grad();
  }

 private:
  std::vector<std::pair<std::string, Tensor<T>>> entries_;
  std::map<std::string, std::size_t> index_;
};

/// Gated recurrent unit: reset, update and candidate transforms for the input
/// and for the previous hidden state.
template <typename T>
struct GruParams {
  Tensor<T> reset_in, reset_hidden, update_in, update_hidden, cand_in, cand_hidden;
  Tensor<T> reset_in_bias, reset_hidden_bias, update_in_bias, update_hidden_bias, cand_in_bias, cand_hidden_bias;

  static GruParams create(ParamStore<T>& store, const std::string& prefix, std::size_t input_dim,
                          std::size_t hidden_dim, Rng& rng) {
    using Init = typename ParamStore<T>::Init;
    GruParams p;
    auto w = [&](const char* name, std::size_t cols) {
      return store.add(prefix + "." + name + ".weight", {hidden_dim, cols}, Init::glorot, rng);
    };
    auto b = [&](const char* name) { return store.add(prefix + "." + name + ".bias", {hidden_dim}, Init::zeros, rng); };
    p.reset_in = w("reset_in", input_dim);
    p.reset_hidden = w("reset_hidden", hidden_dim);
    p.update_in = w("update_in", input_dim);
    p.update_hidden = w("update_hidden", hidden_dim);
    p.cand_in = w("cand_in", input_dim);
    p.cand_hidden = w("cand_hidden", hidden_dim);
    p.reset_in_bias = b("reset_in");
    p.reset_hidden_bias = b("reset_hidden");
    p.update_in_bias = b("update_in");
    p.update_hidden_bias = b("update_hidden");
    p.cand_in_bias = b("cand_in");
    p.cand_hidden_bias = b("cand_hidden");
    return p;
  }

  std::size_t hidden_dim() const { return reset_hidden.dim(0); }
  std::size_t input_dim() const { return reset_in.dim(1); }
};

/// Per-relation weights of one graph layer.
template <typename T>
struct RelationParams {
  Tensor<T> attn_proj;        // neighbour projection inside the inner attention
  Tensor<T> attn_score;       // [1 x 2*att]: scores a concatenated (self, neighbour) pair
  Tensor<T> attn_score_bias;  // [1]
  Tensor<T> message;          // neighbour transform
  Tensor<T> relation_align;   // relation embedding into the outer-attention space
  Tensor<T> relation_out;     // relation embedding into the node output
};

template <typename T>
struct MrgnnLayerParams {
  std::array<RelationParams<T>, kNumRelations> relations;
  Tensor<T> node_align;  // general node embedding into the outer-attention space

  static MrgnnLayerParams create(ParamStore<T>& store, const std::string& prefix, std::size_t input_dim,
                                 std::size_t hidden_dim, Rng& rng) {
    using Init = typename ParamStore<T>::Init;
    MrgnnLayerParams p;
    for (auto r : kRelations) {
      const std::string base = prefix + "." + std::string(relation_name(r)) + ".";
      auto& rel = p.relations[static_cast<std::size_t>(r)];
      rel.attn_proj = store.add(base + "attn_proj", {hidden_dim, input_dim}, Init::glorot, rng);
      rel.attn_score = store.add(base + "attn_score", {1, 2 * hidden_dim}, Init::glorot, rng);
      rel.attn_score_bias = store.add(base + "attn_score_bias", {1}, Init::zeros, rng);
      rel.message = store.add(base + "message", {hidden_dim, input_dim}, Init::glorot, rng);
      rel.relation_align = store.add(base + "relation_align", {hidden_dim, hidden_dim}, Init::glorot, rng);
      rel.relation_out = store.add(base + "relation_out", {hidden_dim, hidden_dim}, Init::glorot, rng);
    }
    p.node_align = store.add(prefix + ".node_align", {hidden_dim, input_dim}, Init::glorot, rng);
    return p;
  }
};

template <typename T>
struct DecoderParams {
  Tensor<T> embedding;
  GruParams<T> gru;
  // Channel projections combined into the integrated context.
  Tensor<T> proj_code, proj_ast, proj_class_name, proj_class_graph;
  // Alignment maps for the channel-level attention.
  Tensor<T> align_code, align_ast, align_class_name, align_class_graph, align_state;
  Tensor<T> output_weight, output_bias;
};

/// Every trainable array of the network, with shapes derived from a config.
template <typename T>
struct ModelParams {
  ParamStore<T> store;
  Tensor<T> code_embedding, ast_embedding;
  GruParams<T> code_encoder, ast_encoder;
  Tensor<T> class_name_embedding, class_name_projection;
  std::vector<MrgnnLayerParams<T>> mrgnn;
  DecoderParams<T> decoder;

  static ModelParams create(const ModelConfig& c, Rng& rng) {
    using Init = typename ParamStore<T>::Init;
    c.validate();
    ModelParams p;
    auto& s = p.store;
    const std::size_t e = c.embedding_dim, h = c.gru_hidden, dl = c.class_embedding_dim, dg = c.mrgnn_hidden;
    p.code_embedding = s.add("code_embedding", {c.code_vocab, e}, Init::glorot, rng);
    p.code_encoder = GruParams<T>::create(s, "code_encoder", e, h, rng);
    p.ast_embedding = s.add("ast_embedding", {c.sbt_vocab, e}, Init::glorot, rng);
    p.ast_encoder = GruParams<T>::create(s, "ast_encoder", e, h, rng);
    p.class_name_embedding = s.add("class_name.embedding", {c.code_vocab, e}, Init::glorot, rng);
    p.class_name_projection = s.add("class_name.projection", {dl, e}, Init::glorot, rng);
    for (std::size_t l = 0; l < c.mrgnn_layers; ++l)
      p.mrgnn.push_back(MrgnnLayerParams<T>::create(s, "mrgnn." + std::to_string(l), l == 0 ? dl : dg, dg, rng));
    auto& d = p.decoder;
    d.embedding = s.add("summary_embedding", {c.summary_vocab, e}, Init::glorot, rng);
    d.gru = GruParams<T>::create(s, "decoder", e, h, rng);
    d.proj_code = s.add("decoder.proj_code", {h, h}, Init::glorot, rng);
    d.proj_ast = s.add("decoder.proj_ast", {h, h}, Init::glorot, rng);
    d.proj_class_name = s.add("decoder.proj_class_name", {h, dl}, Init::glorot, rng);
    d.proj_class_graph = s.add("decoder.proj_class_graph", {h, dg}, Init::glorot, rng);
    d.align_code = s.add("decoder.align_code", {h, h}, Init::glorot, rng);
    d.align_ast = s.add("decoder.align_ast", {h, h}, Init::glorot, rng);
    d.align_class_name = s.add("decoder.align_class_name", {h, dl}, Init::glorot, rng);
    d.align_class_graph = s.add("decoder.align_class_graph", {h, dg}, Init::glorot, rng);
    d.align_state = s.add("decoder.align_state", {h, h}, Init::glorot, rng);
    d.output_weight = s.add("decoder.output.weight", {c.summary_vocab, 2 * h}, Init::glorot, rng);
    d.output_bias = s.add("decoder.output.bias", {c.summary_vocab}, Init::zeros, rng);
    return p;
  }
};

}  // namespace cocosum
