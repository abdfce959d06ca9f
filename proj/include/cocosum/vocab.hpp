#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cocosum/preprocess.hpp"

namespace cocosum {

/// Token <-> id table. Ids 0..5 are reserved for the special tokens.
class Vocab {
 public:
  static constexpr std::size_t kPad = 0, kUnk = 1, kBos = 2, kEos = 3, kNum = 4, kString = 5;
  static constexpr std::size_t kNumSpecials = 6;
  static constexpr std::array<std::string_view, kNumSpecials> kSpecialTokens = {
      "<PAD>", "<UNK>", "<BOS>", "<EOS>", kNumToken, kStringToken};

  Vocab() {
    for (auto s : kSpecialTokens) push(std::string(s));
  }

  /// Keeps the `cap` - 6 most frequent tokens (ties broken lexicographically)
  /// after the specials, so size() <= cap.
  template <typename Corpus>
  static Vocab build(const Corpus& corpus, std::size_t cap) {
    if (cap < kNumSpecials) {
      throw std::invalid_argument("vocabulary cap " + std::to_string(cap) + " is smaller than the " +
                                  std::to_string(kNumSpecials) + " special tokens");
    }
    std::map<std::string, std::size_t> counts;
    for (const auto& sequence : corpus)
      for (const auto& tok : sequence) ++counts[tok];
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    Vocab v;
    for (const auto& [tok, count] : ranked) {
      if (v.size() >= cap) break;
      if (!v.contains(tok)) v.push(tok);
    }
    return v;
  }

  /// Rebuilds a vocabulary from its id-ordered token list.
  static Vocab from_tokens(const std::vector<std::string>& tokens) {
    if (tokens.size() < kNumSpecials) throw std::runtime_error("vocabulary is missing special tokens");
    for (std::size_t i = 0; i < kNumSpecials; ++i) {
      if (tokens[i] != kSpecialTokens[i]) {
        throw std::runtime_error("vocabulary entry " + std::to_string(i) + " should be " +
                                 std::string(kSpecialTokens[i]) + " but is " + tokens[i]);
      }
    }
    Vocab v;
    for (std::size_t i = kNumSpecials; i < tokens.size(); ++i) {
      if (v.contains(tokens[i])) throw std::runtime_error("duplicate vocabulary token: " + tokens[i]);
      v.push(tokens[i]);
    }
    return v;
  }

  std::size_t size() const { return tokens_.size(); }
  bool contains(const std::string& tok) const { return ids_.count(tok) != 0; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::size_t id(const std::string& tok) const {
    auto it = ids_.find(tok);
    return it == ids_.end() ? kUnk : it->second;
  }

  const std::string& token(std::size_t id) const {
    if (id >= tokens_.size()) {
      throw std::out_of_range("token id " + std::to_string(id) + " out of range for vocabulary of size " +
                              std::to_string(tokens_.size()));
    }
    return tokens_[id];
  }

  /// Maps tokens to ids (OOV -> UNK), keeping at most max_len of them.
  std::vector<std::size_t> encode(const std::vector<std::string>& toks, std::size_t max_len) const {
    std::vector<std::size_t> out;
    const std::size_t n = std::min(max_len, toks.size());
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(id(toks[i]));
    return out;
  }

  std::vector<std::string> decode(const std::vector<std::size_t>& ids) const {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (auto i : ids) out.push_back(token(i));
    return out;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write vocabulary file " + path);
    for (const auto& t : tokens_) out << t << '\n';
  }

  static Vocab load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read vocabulary file " + path);
    std::vector<std::string> tokens;
    for (std::string line; std::getline(in, line);) tokens.push_back(line);
    return from_tokens(tokens);
  }

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  void push(std::string tok) {
    ids_.emplace(tok, tokens_.size());
    tokens_.push_back(std::move(tok));
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> ids_;
};

}  // namespace cocosum
