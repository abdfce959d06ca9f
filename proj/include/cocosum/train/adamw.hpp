#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cocosum/tensor.hpp"

namespace cocosum {

struct AdamWConfig {
  double lr = 0.001;
  double weight_decay = 0.3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
using NamedTensors = std::vector<std::pair<std::string, Tensor<T>>>;

/// First and second moment estimates, one buffer per parameter.
template <typename T>
struct AdamMoments {
  std::vector<std::vector<T>> m, v;
  std::uint64_t step = 0;

  static AdamMoments zeros_like(const NamedTensors<T>& params) {
    AdamMoments out;
    for (const auto& [name, p] : params) {
      out.m.emplace_back(p.size(), T{0});
      out.v.emplace_back(p.size(), T{0});
    }
    return out;
  }
};

class NonFiniteGradient : public std::runtime_error {
 public:
  explicit NonFiniteGradient(const std::string& param)
      : std::runtime_error("non-finite gradient in parameter " + param), param_(param) {}
  const std::string& param() const { return param_; }

 private:
  std::string param_;
};

/// One AdamW update at step t (t >= 1) using the grads stored on params.
/// Decay is applied to the parameter directly, outside the adaptive update.
template <typename T>
void adamw_step(NamedTensors<T>& params, AdamMoments<T>& moments, std::uint64_t t, const AdamWConfig& cfg) {
  if (t == 0) throw std::invalid_argument("adamw_step: step counter starts at 1");
  if (moments.m.size() != params.size() || moments.v.size() != params.size()) {
    throw std::invalid_argument("adamw_step: moment buffers do not match the parameter list");
  }
  for (const auto& [name, p] : params) {
    for (auto g : p.grad()) {
      if (!std::isfinite(static_cast<double>(g))) throw NonFiniteGradient(name);
    }
  }
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k].second;
    auto& m = moments.m[k];
    auto& v = moments.v[k];
    if (m.size() != p.size() || v.size() != p.size()) {
      throw DimensionError("adamw_step: moment size mismatch for " + params[k].first);
    }
    auto value = p.mutable_data();
    const auto grad = p.grad();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = static_cast<double>(grad[i]);
      m[i] = static_cast<T>(cfg.beta1 * static_cast<double>(m[i]) + (1.0 - cfg.beta1) * g);
      v[i] = static_cast<T>(cfg.beta2 * static_cast<double>(v[i]) + (1.0 - cfg.beta2) * g * g);
      const double m_hat = static_cast<double>(m[i]) / bc1;
      const double v_hat = static_cast<double>(v[i]) / bc2;
      double x = static_cast<double>(value[i]);
      x -= cfg.lr * cfg.weight_decay * x;
      x -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
      value[i] = static_cast<T>(x);
    }
  }
  moments.step = t;
}

/// Rescales all grads so their joint L2 norm is at most max_norm. Returns the
/// norm before clipping.
template <typename T>
double clip_grad_norm(NamedTensors<T>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& [name, p] : params) {
    for (auto g : p.grad()) sq += static_cast<double>(g) * static_cast<double>(g);
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& [name, p] : params) {
      for (auto& g : p.mutable_grad()) g = static_cast<T>(static_cast<double>(g) * s);
    }
  }
  return norm;
}

}  // namespace cocosum
