#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cocosum/tensor.hpp"

namespace cocosum {

template <typename T>
using LossFn = std::function<Tensor<T>(Tape<T>&)>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t param_index = 0;
  std::size_t coordinate = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates_checked = 0;
};

/// Relative error |a - n| / max(1e-8, |a| + |n|).
inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

template <typename T>
T evaluate_loss(const LossFn<T>& f) {
  Tape<T> tape;
  tape.set_recording(false);
  const T value = f(tape).item();
  if (!std::isfinite(value)) throw std::domain_error("grad_check: loss function returned a non-finite value");
  return value;
}

/// Runs f once with recording on and returns d f / d param for every param.
template <typename T>
std::vector<std::vector<T>> analytic_gradients(const LossFn<T>& f, std::vector<Tensor<T>>& params) {
  for (auto& p : params) p.zero_grad();
  Tape<T> tape;
  const Tensor<T> loss = f(tape);
  if (!std::isfinite(loss.item())) throw std::domain_error("grad_check: loss function returned a non-finite value");
  tape.backward(loss);
  std::vector<std::vector<T>> grads;
  grads.reserve(params.size());
  for (auto& p : params) grads.emplace_back(p.grad().begin(), p.grad().end());
  return grads;
}

/// Compares supplied gradients with central finite differences of f.
template <typename T>
GradCheckReport compare_gradients(const LossFn<T>& f, std::vector<Tensor<T>>& params,
                                  const std::vector<std::vector<T>>& analytic, T eps) {
  if (analytic.size() != params.size()) throw std::invalid_argument("compare_gradients: gradient count mismatch");
  GradCheckReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto values = params[p].mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const T saved = values[i];
      values[i] = saved + eps;
      const T plus = evaluate_loss(f);
      values[i] = saved - eps;
      const T minus = evaluate_loss(f);
      values[i] = saved;
      const double numeric = (static_cast<double>(plus) - static_cast<double>(minus)) / (2.0 * static_cast<double>(eps));
      const double a = static_cast<double>(analytic[p][i]);
      const double err = relative_error(a, numeric);
      ++report.coordinates_checked;
      if (err > report.max_rel_error || report.coordinates_checked == 1) {
        report.max_rel_error = err;
        report.param_index = p;
        report.coordinate = i;
        report.analytic = a;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

/// Maximum relative error between backward() and central differences over
/// every coordinate of every parameter.
template <typename T>
GradCheckReport grad_check(const LossFn<T>& f, std::vector<Tensor<T>>& params, T eps) {
  const auto analytic = analytic_gradients(f, params);
  return compare_gradients(f, params, analytic, eps);
}

}  // namespace cocosum
