#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

namespace cocosum {

/// Network dimensions and regularisation. Defaults follow the published
/// setup; vocabulary sizes are filled in from the built vocabularies.
struct ModelConfig {
  std::size_t code_vocab = 10000;
  std::size_t sbt_vocab = 10000;
  std::size_t summary_vocab = 10000;
  std::size_t embedding_dim = 128;
  std::size_t gru_hidden = 256;
  std::size_t class_embedding_dim = 512;
  std::size_t mrgnn_hidden = 256;
  std::size_t mrgnn_layers = 2;
  double dropout = 0.5;
  double leaky_relu_slope = 0.2;
  std::size_t max_code_len = 150;
  std::size_t max_sbt_len = 500;
  std::size_t max_summary_len = 30;
  std::size_t subgraph_radius = 2;

  void validate() const {
    for (auto [name, v] : {std::pair{"code_vocab", code_vocab}, {"sbt_vocab", sbt_vocab},
                           {"summary_vocab", summary_vocab}, {"embedding_dim", embedding_dim},
                           {"gru_hidden", gru_hidden}, {"class_embedding_dim", class_embedding_dim},
                           {"mrgnn_hidden", mrgnn_hidden}, {"mrgnn_layers", mrgnn_layers},
                           {"max_code_len", max_code_len}, {"max_sbt_len", max_sbt_len},
                           {"max_summary_len", max_summary_len}}) {
      if (v == 0) throw std::invalid_argument(std::string("model config: ") + name + " must be positive");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("model config: dropout must be in [0, 1)");
  }

  bool operator==(const ModelConfig&) const = default;
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"code_vocab", c.code_vocab},
                     {"sbt_vocab", c.sbt_vocab},
                     {"summary_vocab", c.summary_vocab},
                     {"embedding_dim", c.embedding_dim},
                     {"gru_hidden", c.gru_hidden},
                     {"class_embedding_dim", c.class_embedding_dim},
                     {"mrgnn_hidden", c.mrgnn_hidden},
                     {"mrgnn_layers", c.mrgnn_layers},
                     {"dropout", c.dropout},
                     {"leaky_relu_slope", c.leaky_relu_slope},
                     {"max_code_len", c.max_code_len},
                     {"max_sbt_len", c.max_sbt_len},
                     {"max_summary_len", c.max_summary_len},
                     {"subgraph_radius", c.subgraph_radius}};
}

/// Missing keys keep their defaults.
inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  c.code_vocab = j.value("code_vocab", c.code_vocab);
  c.sbt_vocab = j.value("sbt_vocab", c.sbt_vocab);
  c.summary_vocab = j.value("summary_vocab", c.summary_vocab);
  c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
  c.gru_hidden = j.value("gru_hidden", c.gru_hidden);
  c.class_embedding_dim = j.value("class_embedding_dim", c.class_embedding_dim);
  c.mrgnn_hidden = j.value("mrgnn_hidden", c.mrgnn_hidden);
  c.mrgnn_layers = j.value("mrgnn_layers", c.mrgnn_layers);
  c.dropout = j.value("dropout", c.dropout);
  c.leaky_relu_slope = j.value("leaky_relu_slope", c.leaky_relu_slope);
  c.max_code_len = j.value("max_code_len", c.max_code_len);
  c.max_sbt_len = j.value("max_sbt_len", c.max_sbt_len);
  c.max_summary_len = j.value("max_summary_len", c.max_summary_len);
  c.subgraph_radius = j.value("subgraph_radius", c.subgraph_radius);
}

}  // namespace cocosum
