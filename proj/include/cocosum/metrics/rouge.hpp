#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "cocosum/metrics/ngram.hpp"

namespace cocosum {

inline std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

struct RougeL {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

inline RougeL rouge_l_detail(const Tokens& candidate, const Tokens& reference, double beta = 1.2) {
  RougeL out;
  if (candidate.empty() || reference.empty()) return out;
  const auto lcs = static_cast<double>(lcs_length(candidate, reference));
  if (lcs == 0.0) return out;
  out.precision = lcs / static_cast<double>(candidate.size());
  out.recall = lcs / static_cast<double>(reference.size());
  const double b2 = beta * beta;
  out.f = (1.0 + b2) * out.precision * out.recall / (out.recall + b2 * out.precision);
  return out;
}

inline double rouge_l(const Tokens& candidate, const Tokens& reference, double beta = 1.2) {
  return rouge_l_detail(candidate, reference, beta).f;
}

}  // namespace cocosum
