#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "cocosum/metrics/ngram.hpp"

namespace cocosum {

/// Reference document frequencies for n = 1..max_n.
struct CorpusStats {
  std::size_t max_n = 4;
  std::size_t ref_count = 0;
  std::vector<NgramCounts> df;  // df[n - 1]

  static CorpusStats build(const std::vector<Tokens>& references, std::size_t max_n = 4) {
    CorpusStats s;
    s.max_n = max_n;
    s.ref_count = references.size();
    s.df.resize(max_n);
    for (const auto& ref : references) {
      for (std::size_t n = 1; n <= max_n; ++n) {
        for (const auto& [gram, count] : ngram_counts(ref, n)) ++s.df[n - 1][gram];
      }
    }
    return s;
  }

  /// max(0, log(ref_count / (1 + df))).
  double idf(std::size_t n, const Tokens& gram) const {
    const auto& table = df.at(n - 1);
    const auto it = table.find(gram);
    const double d = it == table.end() ? 0.0 : static_cast<double>(it->second);
    return std::max(0.0, std::log(static_cast<double>(ref_count) / (1.0 + d)));
  }
};

namespace detail {

inline std::map<Tokens, double> tfidf_vector(const Tokens& toks, std::size_t n, const CorpusStats& stats) {
  std::map<Tokens, double> out;
  const auto counts = ngram_counts(toks, n);
  std::size_t total = 0;
  for (const auto& [gram, c] : counts) total += c;
  for (const auto& [gram, c] : counts) {
    out[gram] = static_cast<double>(c) / static_cast<double>(total) * stats.idf(n, gram);
  }
  return out;
}

inline double cosine(const std::map<Tokens, double>& a, const std::map<Tokens, double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [g, v] : a) {
    na += v * v;
    if (auto it = b.find(g); it != b.end()) dot += v * it->second;
  }
  for (const auto& [g, v] : b) nb += v * v;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace detail

/// Sum over n of (10 / N) times the TF-IDF cosine between candidate and
/// reference n-gram vectors; ranges over [0, 10].
inline double cider_sample(const Tokens& candidate, const Tokens& reference, const CorpusStats& stats) {
  double score = 0.0;
  for (std::size_t n = 1; n <= stats.max_n; ++n) {
    score += detail::cosine(detail::tfidf_vector(candidate, n, stats), detail::tfidf_vector(reference, n, stats));
  }
  return score * 10.0 / static_cast<double>(stats.max_n);
}

struct CiderResult {
  std::vector<double> per_sample;
  double mean = 0.0;
};

inline CiderResult cider(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references,
                         const CorpusStats& stats) {
  if (stats.ref_count == 0) throw std::invalid_argument("cider: empty corpus statistics");
  if (candidates.size() != references.size()) throw std::invalid_argument("cider: candidate/reference count mismatch");
  CiderResult r;
  for (std::size_t i = 0; i < candidates.size(); ++i) r.per_sample.push_back(cider_sample(candidates[i], references[i], stats));
  double total = 0.0;
  for (auto v : r.per_sample) total += v;
  r.mean = r.per_sample.empty() ? 0.0 : total / static_cast<double>(r.per_sample.size());
  return r;
}

inline CiderResult cider(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references) {
  return cider(candidates, references, CorpusStats::build(references));
}

}  // namespace cocosum
