#pragma once

// Lexical scanner for Java-like source text. Comments and whitespace are
// dropped; everything else becomes a token carrying its source line.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace cocosum {

enum class TokenKind { identifier, number, string_literal, char_literal, punct };

struct SourceToken {
  TokenKind kind;
  std::string text;
  std::size_t line;
};

namespace detail {

inline bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$' || static_cast<unsigned char>(c) >= 0x80;
}
inline bool is_ident_char(char c) { return is_ident_start(c) || std::isdigit(static_cast<unsigned char>(c)); }

// Longest operators first.
inline constexpr std::array<std::string_view, 30> kOperators = {
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", ">=",
    "+=",   "-=",  "*=",  "/=",  "%=",  "&=", "|=", "^=", "<<", ">>", "=",  "<",  ">",  "!",  "~"};

}  // namespace detail

inline std::vector<SourceToken> lex_source(std::string_view src) {
  std::vector<SourceToken> out;
  std::size_t i = 0, line = 1;
  const std::size_t n = src.size();
  auto starts_with = [&](std::string_view s) { return src.substr(i, s.size()) == s; };

  while (i < n) {
    const char c = src[i];
    if (c == '\n') {
      ++line;
      ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (starts_with("//")) {
      while (i < n && src[i] != '\n') ++i;
      continue;
    }
    if (starts_with("/*")) {
      i += 2;
      while (i < n && !starts_with("*/")) {
        if (src[i] == '\n') ++line;
        ++i;
      }
      i = std::min(n, i + 2);
      continue;
    }
    const std::size_t start = i, start_line = line;
    if (starts_with("\"\"\"")) {  // text block
      i += 3;
      while (i < n && !starts_with("\"\"\"")) {
        if (src[i] == '\n') ++line;
        i += (src[i] == '\\') ? 2 : 1;
      }
      i = std::min(n, i + 3);
      out.push_back({TokenKind::string_literal, std::string(src.substr(start, i - start)), start_line});
      continue;
    }
    if (c == '"' || c == '\'') {
      ++i;
      while (i < n && src[i] != c && src[i] != '\n') i += (src[i] == '\\') ? 2 : 1;
      i = std::min(n, i + 1);
      out.push_back({c == '"' ? TokenKind::string_literal : TokenKind::char_literal,
                     std::string(src.substr(start, i - start)), start_line});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      while (i < n) {
        const char d = src[i];
        if (std::isalnum(static_cast<unsigned char>(d)) || d == '_' || d == '.') {
          ++i;
        } else if ((d == '+' || d == '-') && (src[i - 1] == 'e' || src[i - 1] == 'E' || src[i - 1] == 'p' ||
                                              src[i - 1] == 'P') &&
                   !(src[start] == '0' && start + 1 < n && (src[start + 1] == 'x' || src[start + 1] == 'X') &&
                     (src[i - 1] == 'e' || src[i - 1] == 'E'))) {
          ++i;
        } else {
          break;
        }
      }
      out.push_back({TokenKind::number, std::string(src.substr(start, i - start)), start_line});
      continue;
    }
    if (detail::is_ident_start(c)) {
      while (i < n && detail::is_ident_char(src[i])) ++i;
      out.push_back({TokenKind::identifier, std::string(src.substr(start, i - start)), start_line});
      continue;
    }
    std::size_t len = 1;
    for (auto op : detail::kOperators) {
      if (starts_with(op)) {
        len = op.size();
        break;
      }
    }
    i += len;
    out.push_back({TokenKind::punct, std::string(src.substr(start, len)), start_line});
  }
  return out;
}

inline std::vector<std::string> token_texts(const std::vector<SourceToken>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

}  // namespace cocosum
