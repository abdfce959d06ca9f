#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "cocosum/dataset.hpp"
#include "cocosum/model/config.hpp"
#include "cocosum/model/layers.hpp"
#include "cocosum/model/params.hpp"
#include "cocosum/rng.hpp"
#include "cocosum/tensor.hpp"
#include "cocosum/uml.hpp"
#include "cocosum/vocab.hpp"

namespace cocosum {

struct Vocabularies {
  Vocab code, sbt, summary;
};

/// Id-level view of one instance and the class subgraph around its method.
struct ModelInput {
  std::vector<std::size_t> code_ids;
  std::vector<std::size_t> sbt_ids;
  std::vector<std::size_t> summary_ids;  // without BOS / EOS
  std::vector<std::string> node_names;
  std::vector<std::vector<std::size_t>> node_name_ids;
  RelationalAdjacency adjacency;
  std::size_t enclosing = 0;  // index into node_names
};

/// Selects the subgraph the method resides in and maps tokens to ids.
inline ModelInput prepare_input(const SummarizationInstance& instance, const UmlGraph& project_graph,
                                const Vocabularies& vocabs, const ModelConfig& config) {
  if (!project_graph.find(instance.enclosing_class_node_id)) {
    throw std::out_of_range("instance " + instance.id + ": enclosing class node " +
                            std::to_string(instance.enclosing_class_node_id) + " not in graph " +
                            instance.uml_graph_id);
  }
  const UmlGraph sub = subgraph_for_method(project_graph, instance.enclosing_class_node_id, config.subgraph_radius);
  ModelInput in;
  in.code_ids = vocabs.code.encode(instance.code_tokens, config.max_code_len);
  in.sbt_ids = vocabs.sbt.encode(instance.sbt_tokens, config.max_sbt_len);
  in.summary_ids = vocabs.summary.encode(instance.summary_tokens, config.max_summary_len);
  if (in.code_ids.empty()) in.code_ids.push_back(Vocab::kUnk);
  if (in.sbt_ids.empty()) in.sbt_ids.push_back(Vocab::kUnk);
  for (std::size_t i = 0; i < sub.nodes().size(); ++i) {
    const auto& node = sub.nodes()[i];
    if (node.id == instance.enclosing_class_node_id) in.enclosing = i;
    in.node_names.push_back(node.name);
    auto ids = vocabs.code.encode(node.name_tokens, node.name_tokens.size());
    if (ids.empty()) ids.push_back(Vocab::kUnk);
    in.node_name_ids.push_back(std::move(ids));
  }
  in.adjacency = RelationalAdjacency::from_graph(sub);
  return in;
}

template <typename T>
struct EncodedContext {
  std::vector<Tensor<T>> code_states;  // H^(c)
  std::vector<Tensor<T>> ast_states;   // H^(a)
  Tensor<T> code_matrix, ast_matrix;   // the same states stacked as rows
  Tensor<T> class_semantic;            // h^(l) of the enclosing class
  Tensor<T> class_relational;          // h^(g) of the enclosing class
};

template <typename T>
struct DecoderOutput {
  Tensor<T> probs;
  Tensor<T> hidden;
};

/// Training-time behaviour of a forward pass. With a null rng the pass is
/// deterministic: no dropout, full teacher forcing.
struct RunMode {
  Rng* rng = nullptr;
  double teacher_forcing = 1.0;
};

/// Mean negative log-probability of the targets; probabilities below 1e-12
/// are floored.
template <typename T>
Tensor<T> sequence_loss(Tape<T>& tape, const std::vector<Tensor<T>>& step_probs,
                        const std::vector<std::size_t>& targets) {
  if (step_probs.size() != targets.size() || targets.empty()) {
    throw std::invalid_argument("sequence_loss: " + std::to_string(step_probs.size()) + " steps for " +
                                std::to_string(targets.size()) + " targets");
  }
  std::vector<Tensor<T>> nll;
  nll.reserve(targets.size());
  for (std::size_t t = 0; t < targets.size(); ++t) nll.push_back(tape.log(tape.pick(step_probs[t], targets[t]), T(1e-12)));
  return tape.scale(tape.sum(tape.concat(nll)), T{-1} / static_cast<T>(targets.size()));
}

template <typename T>
class Model {
 public:
  Model(const ModelConfig& config, std::uint64_t seed) : config_(config) {
    Rng rng(seed);
    params_ = ModelParams<T>::create(config_, rng);
  }

  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return config_; }
  ModelParams<T>& params() { return params_; }
  const ModelParams<T>& params() const { return params_; }
  ParamStore<T>& store() { return params_.store; }
  const ParamStore<T>& store() const { return params_.store; }

  /// Fixed class vectors (e.g. from a pretrained sentence encoder) used in
  /// place of the trainable name encoder for the named classes.
  void set_class_vector(const std::string& class_name, std::vector<T> vec) {
    if (vec.size() != config_.class_embedding_dim) {
      throw DimensionError("class vector for " + class_name + " has " + std::to_string(vec.size()) +
                           " entries, expected " + std::to_string(config_.class_embedding_dim));
    }
    class_vectors_[class_name] = std::move(vec);
  }
  const std::map<std::string, std::vector<T>>& class_vectors() const { return class_vectors_; }

  Tensor<T> class_semantic_embedding(Tape<T>& tape, const std::string& name,
                                     const std::vector<std::size_t>& name_ids) const {
    if (auto it = class_vectors_.find(name); it != class_vectors_.end())
      return Tensor<T>::vector(it->second);
    return class_semantic_embed(tape, name_ids, params_.class_name_embedding, params_.class_name_projection);
  }

  EncodedContext<T> encode(Tape<T>& tape, const ModelInput& in, const RunMode& mode = {},
                           AttentionTrace* trace = nullptr) const {
    if (in.node_names.empty() || in.enclosing >= in.node_names.size()) {
      throw std::out_of_range("encode: enclosing class node absent from the class graph");
    }
    const Dropout<T> dropout{config_.dropout, mode.rng};
    const auto slope = static_cast<T>(config_.leaky_relu_slope);
    EncodedContext<T> ctx;
    for (auto& h : gru_forward(tape, in.code_ids, params_.code_embedding, params_.code_encoder, {}, dropout))
      ctx.code_states.push_back(dropout(tape, h));
    for (auto& h : gru_forward(tape, in.sbt_ids, params_.ast_embedding, params_.ast_encoder, {}, dropout))
      ctx.ast_states.push_back(dropout(tape, h));
    ctx.code_matrix = tape.stack(ctx.code_states);
    ctx.ast_matrix = tape.stack(ctx.ast_states);

    std::vector<Tensor<T>> semantic;
    semantic.reserve(in.node_names.size());
    for (std::size_t i = 0; i < in.node_names.size(); ++i)
      semantic.push_back(class_semantic_embedding(tape, in.node_names[i], in.node_name_ids.at(i)));
    const auto relational = mrgnn_forward(tape, in.adjacency, semantic, params_.mrgnn, slope, trace);
    ctx.class_semantic = semantic[in.enclosing];
    ctx.class_relational = relational[in.enclosing];
    return ctx;
  }

  /// Decoder hidden state before the first step: the last code encoder state.
  Tensor<T> initial_hidden(const EncodedContext<T>& ctx) const { return ctx.code_states.back(); }

  DecoderOutput<T> decoder_step(Tape<T>& tape, std::size_t prev_token, const Tensor<T>& hidden,
                                const EncodedContext<T>& ctx, const RunMode& mode = {},
                                AttentionTrace* trace = nullptr) const {
    if (ctx.code_states.empty() || ctx.ast_states.empty()) throw std::invalid_argument("decoder_step: empty context");
    const auto& d = params_.decoder;
    const Dropout<T> dropout{config_.dropout, mode.rng};
    if (prev_token >= d.embedding.dim(0)) throw std::out_of_range("decoder_step: token id out of range");
    auto state = gru_step(tape, dropout(tape, tape.row(d.embedding, prev_token)), hidden, d.gru);

    // Sequential attention over each encoder's states.
    auto code_attn = tape.softmax(tape.matmul(ctx.code_matrix, state));
    auto ast_attn = tape.softmax(tape.matmul(ctx.ast_matrix, state));
    auto code_summary = tape.weighted_sum(ctx.code_states, code_attn);
    auto ast_summary = tape.weighted_sum(ctx.ast_states, ast_attn);

    // Channel attention over code, SBT, class name and class graph contexts.
    auto aligned_state = tape.matmul(d.align_state, state);
    auto channel_logits = tape.concat(std::vector<Tensor<T>>{
        tape.dot(tape.matmul(d.align_code, code_summary), aligned_state),
        tape.dot(tape.matmul(d.align_ast, ast_summary), aligned_state),
        tape.dot(tape.matmul(d.align_class_name, ctx.class_semantic), aligned_state),
        tape.dot(tape.matmul(d.align_class_graph, ctx.class_relational), aligned_state)});
    auto channel_attn = tape.softmax(channel_logits);
    auto integrated = tape.sigmoid(tape.weighted_sum(
        {tape.matmul(d.proj_code, code_summary), tape.matmul(d.proj_ast, ast_summary),
         tape.matmul(d.proj_class_name, ctx.class_semantic), tape.matmul(d.proj_class_graph, ctx.class_relational)},
        channel_attn));
    if (trace) {
      trace->code.push_back(to_doubles(code_attn));
      trace->ast.push_back(to_doubles(ast_attn));
      trace->channels.push_back(to_doubles(channel_attn));
    }
    auto logits = affine(tape, d.output_weight, tape.concat(state, integrated), d.output_bias);
    return {tape.softmax(logits), state};
  }

  /// Decodes BOS, y_1, ..., y_T and scores y_1, ..., y_T, EOS. Previous tokens
  /// are the ground truth, except that in training with teacher_forcing < 1
  /// the model's own argmax is fed back with probability 1 - teacher_forcing.
  Tensor<T> loss(Tape<T>& tape, const ModelInput& in, const RunMode& mode = {},
                 AttentionTrace* trace = nullptr) const {
    auto ctx = encode(tape, in, mode, trace);
    std::vector<std::size_t> targets = in.summary_ids;
    targets.push_back(Vocab::kEos);
    std::vector<Tensor<T>> probs;
    probs.reserve(targets.size());
    Tensor<T> hidden = initial_hidden(ctx);
    std::size_t prev = Vocab::kBos;
    for (std::size_t t = 0; t < targets.size(); ++t) {
      auto step = decoder_step(tape, prev, hidden, ctx, mode, trace);
      hidden = step.hidden;
      prev = targets[t];
      if (mode.rng && mode.teacher_forcing < 1.0 && uniform01(*mode.rng) >= mode.teacher_forcing)
        prev = argmax(step.probs);
      probs.push_back(std::move(step.probs));
    }
    return sequence_loss(tape, probs, targets);
  }

  /// Index of the largest entry, lowest index on ties, skipping the listed ids.
  static std::size_t argmax(const Tensor<T>& probs, std::initializer_list<std::size_t> excluded = {}) {
    std::size_t best = probs.size();
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (std::find(excluded.begin(), excluded.end(), i) != excluded.end()) continue;
      if (best == probs.size() || probs.data()[i] > probs.data()[best]) best = i;
    }
    return best;
  }

 private:
  ModelConfig config_;
  ModelParams<T> params_;
  std::map<std::string, std::vector<T>> class_vectors_;
};

}  // namespace cocosum
