#pragma once

// Declaration-level scan of Java sources into a class index, and derivation of
// the four class relations from it.
//
// Rules:
//   GENERALIZATION  A -> B  when A extends B
//   REALIZATION     A -> B  when A implements B
//   ASSOCIATION     A -> B  when B is the declared type of a field of A
//   DEPENDENCY      A -> B  when B is a parameter / return / throws / local /
//                           cast / instantiated type inside A's methods and
//                           not a field type of A
// Names resolve by simple name within the scanned project only.

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "cocosum/lexer.hpp"
#include "cocosum/preprocess.hpp"
#include "cocosum/uml.hpp"

namespace cocosum {

struct ClassDecl {
  std::string name;
  std::string kind;  // class, interface, enum, record
  std::string file;
  std::vector<std::string> extends;
  std::vector<std::string> implements;
  std::vector<std::string> field_types;
  std::vector<std::string> method_types;
};

class ClassIndex {
 public:
  /// First declaration of a name wins; later ones are reported in warnings().
  void add(ClassDecl decl) {
    auto [it, inserted] = by_name_.emplace(decl.name, decls_.size());
    if (!inserted) {
      warnings_.push_back("duplicate class " + decl.name + " in " + decl.file + " ignored (first declared in " +
                          decls_[it->second].file + ")");
      return;
    }
    decls_.push_back(std::move(decl));
  }

  const std::vector<ClassDecl>& decls() const { return decls_; }
  const ClassDecl* find(const std::string& name) const {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? nullptr : &decls_[it->second];
  }
  std::size_t size() const { return decls_.size(); }
  bool empty() const { return decls_.empty(); }

  const std::vector<std::string>& warnings() const { return warnings_; }
  void warn(std::string message) { warnings_.push_back(std::move(message)); }

 private:
  std::vector<ClassDecl> decls_;
  std::map<std::string, std::size_t> by_name_;
  std::vector<std::string> warnings_;
};

namespace detail {

inline const std::unordered_set<std::string_view>& java_keywords() {
  static const std::unordered_set<std::string_view> words = {
      "abstract", "assert",     "boolean",  "break",     "byte",       "case",      "catch",    "char",
      "class",    "const",      "continue", "default",   "do",         "double",    "else",     "enum",
      "extends",  "final",      "finally",  "float",     "for",        "goto",      "if",       "implements",
      "import",   "instanceof", "int",      "interface", "long",       "native",    "new",      "package",
      "private",  "protected",  "public",   "return",    "short",      "static",    "strictfp", "super",
      "switch",   "synchronized", "this",   "throw",     "throws",     "transient", "try",      "void",
      "volatile", "while",      "true",     "false",     "null",       "var",       "record",   "sealed",
      "permits",  "yield"};
  return words;
}

inline bool is_modifier(std::string_view t) {
  static const std::unordered_set<std::string_view> mods = {
      "public", "private", "protected", "static",   "final",    "abstract", "native", "synchronized",
      "transient", "volatile", "strictfp", "default", "sealed", "non"};
  return mods.count(t) != 0;
}

inline bool is_type_keyword(std::string_view t) {
  return t == "class" || t == "interface" || t == "enum" || t == "record";
}

class DeclScanner {
 public:
  DeclScanner(const std::vector<SourceToken>& tokens, std::string file) : toks_(tokens), file_(std::move(file)) {}

  std::vector<ClassDecl> scan() {
    std::vector<ClassDecl> out;
    int depth = 0;
    std::size_t i = 0;
    while (i < toks_.size()) {
      const auto& t = text(i);
      if (t == "{") {
        ++depth;
      } else if (t == "}") {
        --depth;
      } else if (depth == 0 && is_type_keyword(t) && is_ident(i + 1) && !(i > 0 && text(i - 1) == ".") &&
                 !(i > 0 && text(i - 1) == "@")) {
        i = parse_declaration(i, out);
        continue;
      }
      ++i;
    }
    return out;
  }

 private:
  const std::string& text(std::size_t i) const {
    static const std::string empty;
    return i < toks_.size() ? toks_[i].text : empty;
  }
  bool is_ident(std::size_t i) const {
    return i < toks_.size() && toks_[i].kind == TokenKind::identifier && !java_keywords().count(toks_[i].text);
  }

  // Index just past the matching close of the bracket at `open`.
  std::size_t skip_balanced(std::size_t open, std::string_view l, std::string_view r) const {
    int d = 0;
    for (std::size_t i = open; i < toks_.size(); ++i) {
      if (text(i) == l) ++d;
      if (text(i) == r && --d == 0) return i + 1;
    }
    return toks_.size();
  }

  // Index just past a generic argument list starting at `open` ("<"), or
  // `open` itself when the tokens cannot be a type argument list.
  std::size_t skip_generic(std::size_t open) const {
    int d = 0;
    for (std::size_t i = open; i < toks_.size(); ++i) {
      const auto& t = text(i);
      if (t == "<") {
        ++d;
      } else if (t == ">" || t == ">>" || t == ">>>") {
        d -= static_cast<int>(t.size());
        if (d <= 0) return i + 1;
      } else if (!(toks_[i].kind == TokenKind::identifier || t == "," || t == "." || t == "?" || t == "[" ||
                   t == "]" || t == "&" || t == "@")) {
        return open;
      }
    }
    return open;
  }

  std::size_t skip_annotation(std::size_t at) const {
    std::size_t i = at + 1;
    while (is_ident(i) || text(i) == "." || text(i) == "interface") ++i;
    if (text(i) == "(") i = skip_balanced(i, "(", ")");
    return i;
  }

  // Reads `Ident(.Ident)*` starting at i; returns the last segment and moves i past it.
  std::string read_type(std::size_t& i, std::size_t end) const {
    std::string name;
    while (i < end && toks_[i].kind == TokenKind::identifier) {
      name = text(i);
      ++i;
      if (i < end && text(i) == "." && i + 1 < end && toks_[i + 1].kind == TokenKind::identifier) {
        ++i;
      } else {
        break;
      }
    }
    return name;
  }

  // Main type named by a declaration fragment such as "final Map<K, V>[] x".
  std::string leading_type(std::size_t begin, std::size_t end) const {
    std::size_t i = begin;
    while (i < end) {
      if (text(i) == "@") {
        i = skip_annotation(i);
      } else if (is_modifier(text(i))) {
        ++i;
      } else {
        break;
      }
    }
    if (i < end && text(i) == "<") i = skip_generic(i);
    if (i >= end || toks_[i].kind != TokenKind::identifier) return {};
    std::string t = read_type(i, end);
    return java_keywords().count(t) && t != "var" ? std::string{} : t;
  }

  static void push_unique(std::vector<std::string>& v, const std::string& s) {
    if (!s.empty() && std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
  }

  // Splits [begin, end) on top-level commas and records each part's type.
  void collect_param_types(std::size_t begin, std::size_t end, std::vector<std::string>& into) const {
    std::size_t part = begin;
    int angle = 0, paren = 0;
    for (std::size_t i = begin; i <= end; ++i) {
      const auto& t = i < end ? text(i) : std::string(",");
      if (t == "<") ++angle;
      if (t == ">") --angle;
      if (t == ">>") angle -= 2;
      if (t == "(") ++paren;
      if (t == ")") --paren;
      if ((t == "," && angle <= 0 && paren == 0) || i == end) {
        push_unique(into, leading_type(part, i));
        part = i + 1;
        angle = 0;
      }
    }
  }

  std::size_t parse_declaration(std::size_t at, std::vector<ClassDecl>& out) {
    ClassDecl decl;
    decl.kind = text(at);
    decl.name = text(at + 1);
    decl.file = file_;
    std::size_t i = at + 2;
    if (text(i) == "<") i = skip_generic(i);
    std::vector<std::string>* target = nullptr;
    while (i < toks_.size() && text(i) != "{" && text(i) != ";") {
      const auto& t = text(i);
      if (t == "extends") {
        target = &decl.extends;
        ++i;
      } else if (t == "implements") {
        target = &decl.implements;
        ++i;
      } else if (t == "permits") {
        target = nullptr;
        ++i;
      } else if (t == "(") {  // record components
        const std::size_t close = skip_balanced(i, "(", ")");
        collect_param_types(i + 1, close - 1, decl.field_types);
        i = close;
      } else if (t == "<") {
        i = std::max(i + 1, skip_generic(i));
      } else if (t == "@") {
        i = skip_annotation(i);
      } else if (toks_[i].kind == TokenKind::identifier && target) {
        push_unique(*target, read_type(i, toks_.size()));
      } else {
        ++i;
      }
    }
    std::size_t next = i + 1;
    if (text(i) == "{") {
      const std::size_t close = skip_balanced(i, "{", "}");
      parse_body(i + 1, close - 1, decl);
      next = close;
    }
    out.push_back(std::move(decl));
    return next;
  }

  void parse_body(std::size_t begin, std::size_t end, ClassDecl& decl) {
    std::size_t k = begin;
    if (decl.kind == "enum") {
      int nest = 0;
      while (k < end) {
        const auto& t = text(k);
        if (t == "(" || t == "{") ++nest;
        if (t == ")" || t == "}") --nest;
        ++k;
        if (t == ";" && nest == 0) break;
      }
    }
    while (k < end) {
      std::size_t m = k;
      int paren = 0;
      bool assigned = false;
      while (m < end) {
        const auto& t = text(m);
        if (t == "(") ++paren;
        if (t == ")") --paren;
        if (t == "=" && paren == 0) assigned = true;
        if (paren == 0 && t == ";") break;
        if (paren == 0 && t == "{") {
          if (!assigned) break;
          m = skip_balanced(m, "{", "}");
          continue;
        }
        ++m;
      }
      const bool has_body = m < end && text(m) == "{";
      const std::size_t body_end = has_body ? skip_balanced(m, "{", "}") - 1 : m;
      classify_member(k, m, has_body, body_end, decl);
      k = has_body ? body_end + 1 : m + 1;
    }
  }

  void classify_member(std::size_t begin, std::size_t end, bool has_body, std::size_t body_end, ClassDecl& decl) {
    std::size_t i = begin;
    while (i < end && (text(i) == "@" || is_modifier(text(i)) || text(i) == "-")) {
      i = text(i) == "@" ? skip_annotation(i) : i + 1;
    }
    for (std::size_t j = i; j < end; ++j) {
      if (is_type_keyword(text(j)) && !(j > 0 && text(j - 1) == ".")) return;  // nested type: ignored
    }
    if (i >= end) {  // initializer block
      if (has_body) collect_local_types(end + 1, body_end, decl.method_types);
      return;
    }
    std::size_t open = end;
    for (std::size_t j = i; j < end; ++j) {
      if (text(j) == "=") break;
      if (text(j) == "(") {
        open = j;
        break;
      }
    }
    if (open == end) {  // field
      push_unique(decl.field_types, leading_type(i, end));
      return;
    }
    // Method or constructor: [<T>] ReturnType name ( params ) [throws X, Y]
    std::size_t sig = i;
    if (text(sig) == "<") sig = skip_generic(sig);
    if (open > sig + 1) push_unique(decl.method_types, leading_type(sig, open - 1));
    const std::size_t close = skip_balanced(open, "(", ")");
    collect_param_types(open + 1, close - 1, decl.method_types);
    for (std::size_t j = close; j < end; ++j) {
      if (text(j) == "throws") {
        collect_param_types(j + 1, end, decl.method_types);
        break;
      }
    }
    if (has_body) collect_local_types(end + 1, body_end, decl.method_types);
  }

  // Local declarations, instantiations and casts inside [begin, end).
  void collect_local_types(std::size_t begin, std::size_t end, std::vector<std::string>& into) const {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& t = text(i);
      if (t == "new" && i + 1 < end && toks_[i + 1].kind == TokenKind::identifier) {
        std::size_t j = i + 1;
        push_unique(into, read_type(j, end));
        continue;
      }
      if (t == "(" && is_ident(i + 1)) {
        std::size_t j = i + 1;
        const std::string name = read_type(j, end);
        if (j < end && text(j) == ")" && j + 1 < end) {
          const auto& after = toks_[j + 1];
          if (after.kind == TokenKind::identifier || after.kind == TokenKind::string_literal || after.text == "(") {
            push_unique(into, name);
          }
        }
      }
      const bool stmt_start = i == begin || text(i - 1) == ";" || text(i - 1) == "{" || text(i - 1) == "}" ||
                              text(i - 1) == "(" || text(i - 1) == "final";
      if (stmt_start && is_ident(i)) {
        std::size_t j = i;
        const std::string name = read_type(j, end);
        if (j < end && text(j) == "<") {
          const std::size_t g = skip_generic(j);
          if (g == j) continue;
          j = g;
        }
        while (j + 1 < end && text(j) == "[" && text(j + 1) == "]") j += 2;
        if (j + 1 < end && is_ident(j)) {
          const auto& follow = text(j + 1);
          if (follow == "=" || follow == ";" || follow == "," || follow == ":" || follow == ")") push_unique(into, name);
        }
      }
    }
  }

  const std::vector<SourceToken>& toks_;
  std::string file_;
};

}  // namespace detail

struct SourceFile {
  std::string path;
  std::string text;
};

/// One record per top-level class, interface, enum or record declaration.
inline ClassIndex scan_sources(const std::vector<SourceFile>& files) {
  ClassIndex index;
  std::vector<const SourceFile*> ordered;
  for (const auto& f : files) ordered.push_back(&f);
  std::sort(ordered.begin(), ordered.end(), [](const SourceFile* a, const SourceFile* b) { return a->path < b->path; });
  for (const auto* f : ordered) {
    const auto tokens = lex_source(f->text);
    for (auto& decl : detail::DeclScanner(tokens, f->path).scan()) index.add(std::move(decl));
  }
  return index;
}

/// Scans every *.java file below `root` (sorted by path). Unreadable files are
/// skipped with a warning.
inline ClassIndex scan_project(const std::filesystem::path& root) {
  std::vector<SourceFile> files;
  std::vector<std::string> unreadable;
  if (std::filesystem::is_directory(root)) {
    for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
      if (!entry.is_regular_file() || entry.path().extension() != ".java") continue;
      std::ifstream in(entry.path(), std::ios::binary);
      if (!in) {
        unreadable.push_back(entry.path().string());
        continue;
      }
      std::ostringstream buf;
      buf << in.rdbuf();
      files.push_back({std::filesystem::relative(entry.path(), root).generic_string(), buf.str()});
    }
  }
  ClassIndex index = scan_sources(files);
  std::sort(unreadable.begin(), unreadable.end());
  for (const auto& path : unreadable) index.warn("cannot read " + path + ", skipped");
  return index;
}

inline UmlGraph extract_relations(const ClassIndex& index) {
  UmlGraph graph;
  std::map<std::string, std::size_t> ids;
  for (std::size_t i = 0; i < index.decls().size(); ++i) {
    const auto& d = index.decls()[i];
    ids[d.name] = i;
    graph.add_node({i, d.name, normalize_class_name(d.name)});
  }
  auto link = [&](std::size_t src, const std::string& target, Relation r) {
    auto it = ids.find(target);
    if (it != ids.end() && it->second != src) graph.add_edge({src, it->second, r});
  };
  for (std::size_t i = 0; i < index.decls().size(); ++i) {
    const auto& d = index.decls()[i];
    for (const auto& t : d.extends) link(i, t, Relation::generalization);
    for (const auto& t : d.implements) link(i, t, Relation::realization);
    for (const auto& t : d.field_types) link(i, t, Relation::association);
    for (const auto& t : d.method_types) {
      if (std::find(d.field_types.begin(), d.field_types.end(), t) == d.field_types.end())
        link(i, t, Relation::dependency);
    }
  }
  return graph;
}

}  // namespace cocosum
