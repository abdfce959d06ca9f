#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace cocosum {

using Tokens = std::vector<std::string>;
using NgramCounts = std::map<Tokens, std::size_t>;

inline NgramCounts ngram_counts(const Tokens& toks, std::size_t n) {
  NgramCounts out;
  if (n == 0 || toks.size() < n) return out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) ++out[Tokens(toks.begin() + i, toks.begin() + i + n)];
  return out;
}

}  // namespace cocosum
