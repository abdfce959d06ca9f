#pragma once

// Abstract syntax trees in the nested-list exchange format, and their
// structure-based traversal (SBT) flattening:
//   SBT(n) = "(" label(n) SBT(child_1) ... SBT(child_k) ")" label(n)

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cocosum/preprocess.hpp"

namespace cocosum {

struct AstNode {
  std::string label;
  std::vector<AstNode> children;

  bool operator==(const AstNode&) const = default;

  std::size_t node_count() const {
    std::size_t n = 1;
    for (const auto& c : children) n += c.node_count();
    return n;
  }
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

namespace detail {

inline AstNode ast_from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_string() || !j[1].is_array()) {
    throw std::invalid_argument("expected [label, [children...]] at " + (path.empty() ? "/" : path));
  }
  AstNode node{j[0].get<std::string>(), {}};
  if (node.label.empty()) throw std::invalid_argument("empty node label at " + (path.empty() ? "/" : path));
  node.children.reserve(j[1].size());
  for (std::size_t i = 0; i < j[1].size(); ++i)
    node.children.push_back(ast_from_json(j[1][i], path + "/1/" + std::to_string(i)));
  return node;
}

}  // namespace detail

/// Converts an already-parsed JSON value in the exchange format.
inline AstNode ast_from_json(const nlohmann::json& j) { return detail::ast_from_json(j, ""); }

inline nlohmann::json ast_to_json(const AstNode& node) {
  auto children = nlohmann::json::array();
  for (const auto& c : node.children) children.push_back(ast_to_json(c));
  return nlohmann::json::array({node.label, children});
}

/// Parses `["label", [child, ...]]`. Syntax errors report the byte offset;
/// structural errors report the JSON pointer of the offending element.
inline AstNode parse_ast(std::string_view serialized) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(serialized);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed AST: ") + e.what(), e.byte);
  }
  try {
    return ast_from_json(j);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("malformed AST: ") + e.what(), 0);
  }
}

namespace detail {

inline void sbt_emit(const AstNode& node, std::vector<std::string>& out) {
  out.emplace_back("(");
  out.push_back(node.label);
  for (const auto& c : node.children) sbt_emit(c, out);
  out.emplace_back(")");
  out.push_back(node.label);
}

inline AstNode sbt_read(const std::vector<std::string>& toks, std::size_t& pos) {
  if (pos >= toks.size() || toks[pos] != "(") throw ParseError("SBT: expected '('", pos);
  if (pos + 1 >= toks.size()) throw ParseError("SBT: missing label after '('", pos + 1);
  AstNode node{toks[pos + 1], {}};
  pos += 2;
  while (true) {
    if (pos >= toks.size()) throw ParseError("SBT: unterminated node '" + node.label + "'", pos);
    if (toks[pos] == ")") break;
    node.children.push_back(sbt_read(toks, pos));
  }
  if (pos + 1 >= toks.size()) throw ParseError("SBT: missing closing label for '" + node.label + "'", pos + 1);
  if (toks[pos + 1] != node.label) {
    throw ParseError("SBT: closing label '" + toks[pos + 1] + "' does not match '" + node.label + "'", pos + 1);
  }
  pos += 2;
  return node;
}

}  // namespace detail

/// Every node contributes exactly four tokens: "(", label, ")", label.
inline std::vector<std::string> sbt_flatten(const AstNode& root) {
  std::vector<std::string> out;
  out.reserve(4 * root.node_count());
  detail::sbt_emit(root, out);
  return out;
}

/// Inverse of sbt_flatten.
inline AstNode sbt_parse(const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw ParseError("SBT: empty sequence", 0);
  std::size_t pos = 0;
  AstNode root = detail::sbt_read(tokens, pos);
  if (pos != tokens.size()) throw ParseError("SBT: trailing tokens after root", pos);
  return root;
}

/// Lowercases every label in place.
inline void lowercase_labels(AstNode& node) {
  node.label = detail::to_lower(node.label);
  for (auto& c : node.children) lowercase_labels(c);
}

/// Tokenizer-level stand-in for a parser: a "method" root whose children are
/// statements; each `{ ... }` becomes a "block" child of the statement that
/// opens it, and statement leaves are the preprocessed tokens. Separators
/// (';', '{', '}') and parentheses do not appear as leaves.
inline AstNode flat_ast(const std::vector<std::string>& code_tokens) {
  AstNode root{"method", {}};
  std::vector<AstNode*> blocks{&root};
  AstNode statement{"stmt", {}};
  auto flush = [&] {
    if (!statement.children.empty()) blocks.back()->children.push_back(std::move(statement));
    statement = AstNode{"stmt", {}};
  };
  for (const auto& tok : code_tokens) {
    if (tok == ";") {
      flush();
    } else if (tok == "{") {
      AstNode& owner = [&]() -> AstNode& {
        if (statement.children.empty()) return *blocks.back();
        blocks.back()->children.push_back(std::move(statement));
        statement = AstNode{"stmt", {}};
        return blocks.back()->children.back();
      }();
      owner.children.push_back(AstNode{"block", {}});
      blocks.push_back(&owner.children.back());
    } else if (tok == "}") {
      flush();
      if (blocks.size() > 1) blocks.pop_back();
    } else if (tok != "(" && tok != ")") {
      statement.children.push_back(AstNode{tok, {}});
    }
  }
  flush();
  return root;
}

}  // namespace cocosum
