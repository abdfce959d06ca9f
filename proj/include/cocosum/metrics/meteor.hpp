#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "cocosum/metrics/ngram.hpp"

namespace cocosum {

struct MeteorParams {
  double alpha = 0.9;
  double beta = 3.0;
  double gamma = 0.5;
};

struct MeteorAlignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
  bool exact = true;  // false when the search budget ran out
};

namespace detail {

/// Exact-match alignment with the largest number of matched unigrams and,
/// among those, the fewest chunks. A chunk is a run of matches adjacent in
/// both sentences. Memoised search over (position, previous reference slot,
/// used reference slots); when more than max_states states are needed the
/// remaining decisions are taken greedily.
class ChunkSearch {
 public:
  ChunkSearch(const Tokens& cand, const Tokens& ref, std::size_t max_states)
      : cand_(cand), ref_(ref), used_(ref.size(), false), max_states_(max_states) {
    std::map<std::string, std::size_t> cand_count, ref_count;
    for (const auto& t : cand) ++cand_count[t];
    for (std::size_t j = 0; j < ref.size(); ++j) {
      ++ref_count[ref[j]];
      slots_[ref[j]].push_back(j);
    }
    for (const auto& [tok, n] : cand_count) {
      if (auto it = ref_count.find(tok); it != ref_count.end()) {
        target_[tok] = std::min(n, it->second);
        total_ += target_[tok];
      }
    }
    remaining_cand_ = cand_count;
  }

  MeteorAlignment run() {
    MeteorAlignment out;
    out.matches = total_;
    if (total_ == 0) return out;
    out.chunks = solve(0, kNone);
    out.exact = !budget_hit_;
    return out;
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  std::size_t solve(std::size_t i, std::size_t prev) {
    if (i == cand_.size()) return 0;
    const std::string key = state_key(i, prev);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    const bool greedy = memo_.size() >= max_states_;
    if (greedy) budget_hit_ = true;

    const auto& tok = cand_[i];
    const std::size_t later = --remaining_cand_[tok];  // occurrences after i
    std::size_t free_slots = 0;
    if (auto it = slots_.find(tok); it != slots_.end()) {
      for (auto j : it->second) free_slots += used_[j] ? 0 : 1;
    }
    const std::size_t matched = matched_[tok];
    const std::size_t need = target_.count(tok) ? target_.at(tok) : 0;

    std::size_t best = kInfinity;
    // Matching is forced when skipping would leave the alignment short.
    const bool can_skip = matched + std::min(later, free_slots) >= need;
    if (matched < need && free_slots > 0) {
      std::vector<std::size_t> options;
      for (auto j : slots_.at(tok)) {
        if (!used_[j]) options.push_back(j);
      }
      // Continuing the current chunk first gives a good early bound.
      std::stable_partition(options.begin(), options.end(),
                            [&](std::size_t j) { return prev != kNone && j == prev + 1; });
      for (auto j : options) {
        used_[j] = true;
        ++matched_[tok];
        const std::size_t cost = (prev != kNone && j == prev + 1) ? 0 : 1;
        const std::size_t sub = solve(i + 1, j);
        if (sub != kInfinity) best = std::min(best, cost + sub);
        --matched_[tok];
        used_[j] = false;
        if (greedy && best != kInfinity) break;
      }
    }
    if (can_skip && !(greedy && best != kInfinity)) {
      const std::size_t sub = solve(i + 1, kNone);
      best = std::min(best, sub);
    }
    ++remaining_cand_[tok];
    if (!greedy) memo_.emplace(key, best);
    return best;
  }

  std::string state_key(std::size_t i, std::size_t prev) const {
    std::string key = std::to_string(i) + ':' + (prev == kNone ? std::string("-") : std::to_string(prev)) + ':';
    key.reserve(key.size() + used_.size());
    for (bool u : used_) key.push_back(u ? '1' : '0');
    return key;
  }

  static constexpr std::size_t kInfinity = std::numeric_limits<std::size_t>::max() / 2;

  const Tokens& cand_;
  const Tokens& ref_;
  std::vector<bool> used_;
  std::map<std::string, std::vector<std::size_t>> slots_;
  std::map<std::string, std::size_t> target_, matched_, remaining_cand_;
  std::size_t total_ = 0;
  std::size_t max_states_;
  bool budget_hit_ = false;
  std::unordered_map<std::string, std::size_t> memo_;
};

}  // namespace detail

inline MeteorAlignment meteor_align(const Tokens& candidate, const Tokens& reference,
                                    std::size_t max_states = 200000) {
  return detail::ChunkSearch(candidate, reference, max_states).run();
}

/// Exact-token METEOR: F = PR / (alpha P + (1 - alpha) R),
/// penalty = gamma (chunks / matches)^beta, score = F (1 - penalty).
inline double meteor(const Tokens& candidate, const Tokens& reference, const MeteorParams& p = {}) {
  if (candidate.empty() || reference.empty()) return 0.0;
  const auto a = meteor_align(candidate, reference);
  if (a.matches == 0) return 0.0;
  const double m = static_cast<double>(a.matches);
  const double precision = m / static_cast<double>(candidate.size());
  const double recall = m / static_cast<double>(reference.size());
  const double f = precision * recall / (p.alpha * precision + (1.0 - p.alpha) * recall);
  const double penalty = p.gamma * std::pow(static_cast<double>(a.chunks) / m, p.beta);
  return f * (1.0 - penalty);
}

}  // namespace cocosum
