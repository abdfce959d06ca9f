#pragma once

#include <cstddef>
#include <vector>

#include "cocosum/model/model.hpp"
#include "cocosum/vocab.hpp"

namespace cocosum {

/// Greedy decoding from BOS. Each step takes the most probable token other
/// than PAD and BOS (lowest id on ties) and stops at EOS, which is not
/// returned, or after max_len tokens.
template <typename T>
std::vector<std::size_t> greedy_decode(const Model<T>& model, const ModelInput& in, std::size_t max_len,
                                       AttentionTrace* trace = nullptr) {
  std::vector<std::size_t> out;
  if (max_len == 0) return out;
  Tape<T> tape;
  tape.set_recording(false);
  const auto ctx = model.encode(tape, in, {}, trace);
  Tensor<T> hidden = model.initial_hidden(ctx);
  std::size_t prev = Vocab::kBos;
  while (out.size() < max_len) {
    auto step = model.decoder_step(tape, prev, hidden, ctx, {}, trace);
    hidden = step.hidden;
    prev = Model<T>::argmax(step.probs, {Vocab::kPad, Vocab::kBos});
    if (prev == Vocab::kEos) break;
    out.push_back(prev);
  }
  return out;
}

}  // namespace cocosum
