#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "cocosum/metrics/ngram.hpp"

namespace cocosum {

struct BleuDetail {
  std::vector<double> precisions;  // p_1..p_N after smoothing
  double brevity_penalty = 0.0;
  double score = 0.0;
};

/// Sentence BLEU-N with a single reference. Unigram precision is the plain
/// clipped precision; higher orders use (matches + 1) / (total + 1).
inline BleuDetail bleu_detail(const Tokens& candidate, const Tokens& reference, std::size_t max_n = 4) {
  BleuDetail d;
  if (candidate.empty() || max_n == 0) return d;
  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  d.brevity_penalty = c > r ? 1.0 : std::exp(1.0 - r / c);
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    const auto cand = ngram_counts(candidate, n);
    const auto ref = ngram_counts(reference, n);
    std::size_t matches = 0, total = 0;
    for (const auto& [gram, count] : cand) {
      total += count;
      if (auto it = ref.find(gram); it != ref.end()) matches += std::min(count, it->second);
    }
    const double p = n == 1 ? (total == 0 ? 0.0 : static_cast<double>(matches) / static_cast<double>(total))
                            : (static_cast<double>(matches) + 1.0) / (static_cast<double>(total) + 1.0);
    d.precisions.push_back(p);
    if (n == 1 && p == 0.0) return d;
    log_sum += std::log(p) / static_cast<double>(max_n);
  }
  d.score = d.brevity_penalty * std::exp(log_sum);
  return d;
}

inline double bleu(const Tokens& candidate, const Tokens& reference, std::size_t max_n = 4) {
  return bleu_detail(candidate, reference, max_n).score;
}

}  // namespace cocosum
