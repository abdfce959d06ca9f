#pragma once

// Identifier splitting and normalisation of code, summary and class-name text.

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "cocosum/lexer.hpp"

namespace cocosum {

inline constexpr std::string_view kNumToken = "<NUM>";
inline constexpr std::string_view kStringToken = "<STRING>";

namespace detail {

enum class CharClass { lower, upper, digit, other };

inline CharClass classify(char c) {
  const auto u = static_cast<unsigned char>(c);
  if (std::isupper(u)) return CharClass::upper;
  if (std::isdigit(u)) return CharClass::digit;
  if (std::islower(u) || u >= 0x80) return CharClass::lower;
  return CharClass::other;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace detail

/// Splits an identifier into lowercase subtokens.
///
/// Boundaries: any character that is not a letter or digit (dropped),
/// lower->upper ("getName"), the last capital of an acronym run that is
/// followed by lowercase ("URLParser" -> url, parser), and letter<->digit.
inline std::vector<std::string> split_subtokens(std::string_view identifier) {
  using detail::CharClass;
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) out.push_back(detail::to_lower(current));
    current.clear();
  };
  for (std::size_t i = 0; i < identifier.size(); ++i) {
    const char c = identifier[i];
    const CharClass cls = detail::classify(c);
    if (cls == CharClass::other) {
      flush();
      continue;
    }
    if (!current.empty()) {
      const CharClass prev = detail::classify(current.back());
      const bool letter = cls != CharClass::digit, prev_letter = prev != CharClass::digit;
      if (letter != prev_letter) {
        flush();
      } else if (prev == CharClass::lower && cls == CharClass::upper) {
        flush();
      } else if (prev == CharClass::upper && cls == CharClass::upper && i + 1 < identifier.size() &&
                 detail::classify(identifier[i + 1]) == CharClass::lower) {
        flush();
      }
    }
    current.push_back(c);
  }
  flush();
  return out;
}

/// Strips generic parameter text, drops any qualifier up to the last dot, then
/// splits the remaining simple name. "Parent.Child" -> [child],
/// "Map<K,V>" -> [map].
inline std::vector<std::string> normalize_class_name(std::string_view raw) {
  return split_subtokens([&] {
    std::string stripped;
    int depth = 0;
    for (char c : raw) {
      if (c == '<') {
        ++depth;
      } else if (c == '>') {
        if (depth > 0) --depth;
      } else if (depth == 0) {
        stripped.push_back(c);
      }
    }
    const auto dot = stripped.find_last_of('.');
    return dot == std::string::npos ? stripped : stripped.substr(dot + 1);
  }());
}

/// Simple (unqualified, non-generic) form of a class name, case preserved.
inline std::string simple_class_name(std::string_view raw) {
  std::string stripped;
  int depth = 0;
  for (char c : raw) {
    if (c == '<') {
      ++depth;
    } else if (c == '>') {
      if (depth > 0) --depth;
    } else if (depth == 0 && !std::isspace(static_cast<unsigned char>(c))) {
      stripped.push_back(c);
    }
  }
  const auto dot = stripped.find_last_of('.');
  return dot == std::string::npos ? stripped : stripped.substr(dot + 1);
}

/// Numerals become <NUM>, string and char literals <STRING>, identifiers are
/// subtoken-split, everything else is lowercased.
inline std::vector<std::string> preprocess_code(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& tok : tokens) {
    if (tok.empty()) continue;
    const char c = tok.front();
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && tok.size() > 1 && std::isdigit(static_cast<unsigned char>(tok[1])))) {
      out.emplace_back(kNumToken);
    } else if (c == '"' || c == '\'') {
      out.emplace_back(kStringToken);
    } else if (detail::is_ident_start(c)) {
      for (auto& sub : split_subtokens(tok)) out.push_back(std::move(sub));
    } else {
      out.push_back(detail::to_lower(tok));
    }
  }
  return out;
}

/// Lexes raw method text and preprocesses the resulting tokens.
inline std::vector<std::string> preprocess_code_text(std::string_view code) {
  return preprocess_code(token_texts(lex_source(code)));
}

/// Removes punctuation, splits words into subtokens and lowercases. Returns an
/// empty list when fewer than three tokens remain.
inline std::vector<std::string> preprocess_summary(std::string_view text) {
  std::vector<std::string> out;
  std::string word;
  auto flush = [&] {
    for (auto& sub : split_subtokens(word)) out.push_back(std::move(sub));
    word.clear();
  };
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c)) || std::ispunct(static_cast<unsigned char>(c))) {
      flush();
    } else {
      word.push_back(c);
    }
  }
  flush();
  if (out.size() < 3) out.clear();
  return out;
}

}  // namespace cocosum
