#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "cocosum/train/adamw.hpp"

namespace cocosum {

/// Optimisation settings. batch_size and epochs default to the full-corpus
/// regime; small corpora need much smaller values.
struct TrainConfig {
  double lr = 0.001;
  double weight_decay = 0.3;
  std::size_t batch_size = 256;
  std::size_t epochs = 40;
  std::uint64_t seed = 1;
  double teacher_forcing = 1.0;
  double clip_norm = 5.0;

  void validate() const {
    if (!(lr > 0.0)) throw std::invalid_argument("train config: lr must be positive");
    if (weight_decay < 0.0) throw std::invalid_argument("train config: weight_decay must be non-negative");
    if (batch_size == 0) throw std::invalid_argument("train config: batch_size must be positive");
    if (!(teacher_forcing >= 0.0 && teacher_forcing <= 1.0)) {
      throw std::invalid_argument("train config: teacher_forcing must be in [0, 1]");
    }
  }

  AdamWConfig optimizer() const {
    AdamWConfig c;
    c.lr = lr;
    c.weight_decay = weight_decay;
    return c;
  }

  bool operator==(const TrainConfig&) const = default;
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"lr", c.lr},
                     {"weight_decay", c.weight_decay},
                     {"batch_size", c.batch_size},
                     {"epochs", c.epochs},
                     {"seed", c.seed},
                     {"teacher_forcing", c.teacher_forcing},
                     {"clip_norm", c.clip_norm}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  c.lr = j.value("lr", c.lr);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.seed = j.value("seed", c.seed);
  c.teacher_forcing = j.value("teacher_forcing", c.teacher_forcing);
  c.clip_norm = j.value("clip_norm", c.clip_norm);
}

}  // namespace cocosum
