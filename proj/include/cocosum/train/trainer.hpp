#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cocosum/model/model.hpp"
#include "cocosum/rng.hpp"
#include "cocosum/train/adamw.hpp"
#include "cocosum/train/checkpoint.hpp"
#include "cocosum/train/config.hpp"

namespace cocosum {

struct EpochLoss {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = std::numeric_limits<double>::quiet_NaN();  // NaN without a validation set
};

/// One "epoch,train_loss,val_loss" line per epoch.
inline std::string format_loss_log(const std::vector<EpochLoss>& log) {
  std::ostringstream out;
  out << std::setprecision(10);
  for (const auto& e : log) {
    out << e.epoch << ',' << e.train_loss << ',';
    if (std::isnan(e.val_loss)) {
      out << "nan";
    } else {
      out << e.val_loss;
    }
    out << '\n';
  }
  return out.str();
}

template <typename T>
class Trainer {
 public:
  Trainer(Model<T>& model, TrainConfig config, Vocabularies vocabs)
      : model_(model), config_(config), vocabs_(std::move(vocabs)), rng_(config.seed) {
    config_.validate();
    params_ = model_.store().entries();
    moments_ = AdamMoments<T>::zeros_like(params_);
  }

  const TrainConfig& config() const { return config_; }
  std::uint64_t epoch() const { return epoch_; }
  std::uint64_t step() const { return moments_.step; }
  const AdamMoments<T>& moments() const { return moments_; }

  /// One pass over the data in a seeded shuffled order. Returns the mean
  /// per-sample training loss.
  double train_epoch(const std::vector<ModelInput>& data) {
    if (data.empty()) throw std::invalid_argument("train_epoch: empty dataset");
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_in_place(order, rng_);
    const RunMode mode{&rng_, config_.teacher_forcing};
    const auto opt = config_.optimizer();
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
      const std::size_t end = std::min(order.size(), start + config_.batch_size);
      model_.store().zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        Tape<T> tape;
        const auto loss = model_.loss(tape, data[order[k]], mode);
        const double value = static_cast<double>(loss.item());
        if (!std::isfinite(value)) {
          throw std::runtime_error("non-finite training loss at epoch " + std::to_string(epoch_ + 1) + ", sample " +
                                   std::to_string(order[k]));
        }
        total += value;
        tape.backward(loss);
      }
      const T inv = T{1} / static_cast<T>(end - start);
      for (auto& [name, p] : params_) {
        for (auto& g : p.mutable_grad()) g *= inv;
      }
      clip_grad_norm(params_, config_.clip_norm);
      adamw_step(params_, moments_, moments_.step + 1, opt);
    }
    ++epoch_;
    return total / static_cast<double>(data.size());
  }

  /// Mean teacher-forced loss without dropout or parameter updates.
  double evaluate(const std::vector<ModelInput>& data) const {
    if (data.empty()) return std::numeric_limits<double>::quiet_NaN();
    double total = 0.0;
    for (const auto& in : data) {
      Tape<T> tape;
      tape.set_recording(false);
      total += static_cast<double>(model_.loss(tape, in).item());
    }
    return total / static_cast<double>(data.size());
  }

  Checkpoint checkpoint() const {
    auto c = make_checkpoint(model_, config_, vocabs_, &moments_);
    c.epoch = epoch_;
    c.rng_state = rng_state(rng_);
    return c;
  }

  /// Continues from a saved state: parameters, optimizer moments, epoch and
  /// shuffling stream.
  void restore(const Checkpoint& c) {
    load_parameters(model_, c);
    moments_ = load_moments<T>(c);
    epoch_ = c.epoch;
    restore_rng_state(rng_, c.rng_state);
  }

 private:
  Model<T>& model_;
  TrainConfig config_;
  Vocabularies vocabs_;
  Rng rng_;
  NamedTensors<T> params_;
  AdamMoments<T> moments_;
  std::uint64_t epoch_ = 0;
};

struct TrainResult {
  std::vector<EpochLoss> log;
  Checkpoint best;  // lowest validation loss, or the last epoch without validation data
};

using EpochCallback = std::function<void(const EpochLoss&)>;

/// Runs config.epochs epochs and keeps the checkpoint with the lowest
/// validation loss (earliest on ties).
template <typename T>
TrainResult train(Model<T>& model, const std::vector<ModelInput>& train_set, const std::vector<ModelInput>& val_set,
                  const TrainConfig& config, const Vocabularies& vocabs, const EpochCallback& on_epoch = {}) {
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");
  Trainer<T> trainer(model, config, vocabs);
  TrainResult result;
  bool have_best = false;
  for (std::size_t e = 0; e < config.epochs; ++e) {
    EpochLoss entry;
    entry.train_loss = trainer.train_epoch(train_set);
    entry.epoch = trainer.epoch();
    if (!val_set.empty()) entry.val_loss = trainer.evaluate(val_set);
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
    if (val_set.empty() || !have_best || entry.val_loss < result.best.best_val_loss) {
      result.best = trainer.checkpoint();
      result.best.best_val_loss = val_set.empty() ? entry.train_loss : entry.val_loss;
      have_best = true;
    }
  }
  if (!have_best) {
    result.best = trainer.checkpoint();
  }
  return result;
}

}  // namespace cocosum
