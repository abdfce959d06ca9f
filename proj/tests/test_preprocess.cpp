#include <algorithm>
#include <cctype>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cocosum/dataset.hpp"
#include "cocosum/lexer.hpp"
#include "cocosum/preprocess.hpp"
#include "cocosum/vocab.hpp"

using namespace cocosum;
using Strings = std::vector<std::string>;

namespace {

bool has_upper(const std::string& s) {
  for (char c : s)
    if (std::isupper(static_cast<unsigned char>(c))) return true;
  return false;
}

bool is_sentinel(const std::string& s) { return s == kNumToken || s == kStringToken; }

std::string alnum_lower(const std::string& s) {
  std::string out;
  for (char c : s)
    if (std::isalnum(static_cast<unsigned char>(c))) out.push_back(static_cast<char>(std::tolower(c)));
  return out;
}

}  // namespace

TEST(SplitSubtokens, CamelCase) {
  EXPECT_EQ(split_subtokens("getPropertyDescriptor"), (Strings{"get", "property", "descriptor"}));
  EXPECT_EQ(split_subtokens("x"), (Strings{"x"}));
}

TEST(SplitSubtokens, UnderscoreAcronymDigit) {
  EXPECT_EQ(split_subtokens("parse_URL2"), (Strings{"parse", "url", "2"}));
  EXPECT_EQ(split_subtokens("URLParser"), (Strings{"url", "parser"}));
  EXPECT_EQ(split_subtokens("MAX_SIZE"), (Strings{"max", "size"}));
  EXPECT_EQ(split_subtokens("utf8Decoder"), (Strings{"utf", "8", "decoder"}));
  EXPECT_TRUE(split_subtokens("__").empty());
}

TEST(SplitSubtokens, LosslessOnRandomIdentifiers) {
  std::mt19937_64 gen(7);
  const std::string alphabet = "abcXYZ019_$";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1), len(1, 16);
  for (int trial = 0; trial < 2000; ++trial) {
    std::string id;
    for (std::size_t i = len(gen); i > 0; --i) id.push_back(alphabet[pick(gen)]);
    std::string joined;
    for (const auto& s : split_subtokens(id)) {
      EXPECT_FALSE(s.empty());
      EXPECT_FALSE(has_upper(s)) << id;
      joined += s;
    }
    EXPECT_EQ(joined, alnum_lower(id)) << id;
  }
}

TEST(NormalizeClassName, QualifiedGenericAndCompound) {
  EXPECT_EQ(normalize_class_name("Parent.Child"), (Strings{"child"}));
  EXPECT_EQ(normalize_class_name("Map<K,V>"), (Strings{"map"}));
  EXPECT_EQ(normalize_class_name("AbstractResourceHandle"), (Strings{"abstract", "resource", "handle"}));
  EXPECT_EQ(normalize_class_name("java.util.HashMap<String, List<Integer>>"), (Strings{"hash", "map"}));
  EXPECT_EQ(simple_class_name("a.b.Outer<T>"), "Outer");
}

TEST(PreprocessCode, Sentinels) {
  EXPECT_EQ(preprocess_code({"return", "42", ";"}), (Strings{"return", "<NUM>", ";"}));
  EXPECT_EQ(preprocess_code({"s", "=", "\"hi\""}), (Strings{"s", "=", "<STRING>"}));
  EXPECT_EQ(preprocess_code({"c", "=", "'x'"}), (Strings{"c", "=", "<STRING>"}));
  EXPECT_EQ(preprocess_code({"d", "=", ".5"}), (Strings{"d", "=", "<NUM>"}));
  EXPECT_TRUE(preprocess_code({}).empty());
}

TEST(PreprocessCode, FromSourceText) {
  const auto toks = preprocess_code_text("public int getSize() { // count\n return this.itemCount + 0x1F; }");
  EXPECT_EQ(toks, (Strings{"public", "int", "get", "size", "(", ")", "{", "return", "this", ".", "item", "count", "+",
                           "<NUM>", ";", "}"}));
  for (const auto& t : toks) EXPECT_TRUE(is_sentinel(t) || !has_upper(t)) << t;
}

TEST(Lexer, LiteralsCommentsAndLines) {
  const auto toks = lex_source("a /* x\ny */ \"q\\\"s\"\n>>>= 1.5e3f 'c'");
  ASSERT_EQ(toks.size(), 5u);
  EXPECT_EQ(toks[0].text, "a");
  EXPECT_EQ(toks[1].kind, TokenKind::string_literal);
  EXPECT_EQ(toks[1].text, "\"q\\\"s\"");
  EXPECT_EQ(toks[1].line, 2u);
  EXPECT_EQ(toks[2].text, ">>>=");
  EXPECT_EQ(toks[3].kind, TokenKind::number);
  EXPECT_EQ(toks[3].text, "1.5e3f");
  EXPECT_EQ(toks[4].kind, TokenKind::char_literal);
  EXPECT_EQ(toks[4].line, 3u);
}

TEST(PreprocessSummary, Examples) {
  EXPECT_EQ(preprocess_summary("Visits a field of the class."), (Strings{"visits", "a", "field", "of", "the", "class"}));
  EXPECT_TRUE(preprocess_summary("OK.").empty());
  EXPECT_TRUE(preprocess_summary("").empty());
  EXPECT_TRUE(preprocess_summary("Returns the name.").size() == 3);
  EXPECT_TRUE(preprocess_summary("Paid twice.").empty());
}

TEST(Vocab, SpecialsHaveFixedIds) {
  const Vocab v;
  ASSERT_EQ(v.size(), 6u);
  EXPECT_EQ(v.id("<PAD>"), Vocab::kPad);
  EXPECT_EQ(v.id("<UNK>"), Vocab::kUnk);
  EXPECT_EQ(v.id("<BOS>"), Vocab::kBos);
  EXPECT_EQ(v.id("<EOS>"), Vocab::kEos);
  EXPECT_EQ(v.id("<NUM>"), Vocab::kNum);
  EXPECT_EQ(v.id("<STRING>"), Vocab::kString);
}

TEST(Vocab, FrequencyThenLexicographic) {
  const std::vector<Strings> corpus = {{"b", "a", "a"}, {"a"}, {"b"}};
  const auto v = Vocab::build(corpus, 8);
  EXPECT_EQ(v.id("a"), 6u);
  EXPECT_EQ(v.id("b"), 7u);

  const std::vector<Strings> tie = {{"b", "b", "b", "a", "a", "a"}};
  const auto t = Vocab::build(tie, 8);
  EXPECT_EQ(t.id("a"), 6u);
  EXPECT_EQ(t.id("b"), 7u);
}

TEST(Vocab, CapIsTotalSize) {
  const std::vector<Strings> corpus = {{"a", "a", "a", "b", "b", "c"}};
  const auto v = Vocab::build(corpus, 7);
  EXPECT_EQ(v.size(), 7u);
  EXPECT_TRUE(v.contains("a"));
  EXPECT_FALSE(v.contains("b"));
  EXPECT_EQ(v.id("zzz"), Vocab::kUnk);
  EXPECT_THROW(Vocab::build(corpus, 5), std::invalid_argument);
}

TEST(Vocab, SentinelsInCorpusKeepReservedIds) {
  const std::vector<Strings> corpus = {{"<NUM>", "<NUM>", "x"}};
  const auto v = Vocab::build(corpus, 10);
  EXPECT_EQ(v.size(), 7u);
  EXPECT_EQ(v.id("<NUM>"), Vocab::kNum);
}

TEST(Vocab, DeterministicAndBijective) {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<int> word(0, 40);
  std::vector<Strings> corpus(50);
  for (auto& s : corpus)
    for (int i = 0; i < 12; ++i) s.push_back("w" + std::to_string(word(gen)));
  const auto a = Vocab::build(corpus, 30), b = Vocab::build(corpus, 30);
  EXPECT_EQ(a, b);
  EXPECT_LE(a.size(), 30u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.id(a.token(i)), i);
}

TEST(Vocab, EncodeDecode) {
  const std::vector<Strings> corpus = {{"get", "the", "name"}};
  const auto v = Vocab::build(corpus, 100);
  const Strings in = {"the", "name"};
  EXPECT_EQ(v.decode(v.encode(in, 30)), in);
  EXPECT_EQ(v.encode({"missing"}, 30), (std::vector<std::size_t>{Vocab::kUnk}));
  Strings longer(50, "get");
  EXPECT_LE(v.encode(longer, 30).size(), 30u);
  EXPECT_THROW(v.decode({v.size()}), std::out_of_range);
}

TEST(Vocab, SaveLoadRoundTrip) {
  const std::vector<Strings> corpus = {{"alpha", "beta", "beta"}};
  const auto v = Vocab::build(corpus, 100);
  const std::string path = ::testing::TempDir() + "/vocab_roundtrip.vocab";
  v.save(path);
  EXPECT_EQ(Vocab::load(path), v);
  EXPECT_THROW(Vocab::from_tokens({"<PAD>", "<UNK>"}), std::runtime_error);
}

namespace {

UmlGraph shop_graph() {
  UmlGraph g;
  g.add_node({0, "Cart", {"cart"}});
  g.add_node({1, "Product", {"product"}});
  return g;
}

RawRecord record(std::string summary, std::string graph = "g", std::string cls = "shop.Cart") {
  RawRecord r;
  r.id = "r1";
  r.class_name = std::move(cls);
  r.code = "int total() { return items.size() * 2; }";
  r.summary = std::move(summary);
  r.uml_graph_id = std::move(graph);
  return r;
}

}  // namespace

TEST(Dataset, FilterRules) {
  const UmlGraph g = shop_graph();
  const GraphLookup lookup = [&](const std::string& id) -> const UmlGraph* { return id == "g" ? &g : nullptr; };
  PreprocessStats stats;
  const auto kept = preprocess_record(record("Returns the cart total."), lookup, stats);
  ASSERT_TRUE(kept.has_value());
  EXPECT_EQ(kept->enclosing_class_node_id, 0u);
  EXPECT_EQ(kept->class_name_tokens, (Strings{"cart"}));
  EXPECT_EQ(kept->summary_tokens, (Strings{"returns", "the", "cart", "total"}));
  EXPECT_FALSE(kept->sbt_tokens.empty());
  EXPECT_FALSE(preprocess_record(record("Cart total."), lookup, stats));
  EXPECT_FALSE(preprocess_record(record("Returns the total.", "other"), lookup, stats));
  EXPECT_FALSE(preprocess_record(record("Returns the total.", "g", "Warehouse"), lookup, stats));
  EXPECT_EQ(stats.kept, 1u);
  EXPECT_EQ(stats.dropped.at(kDropShortSummary), 1u);
  EXPECT_EQ(stats.dropped.at(kDropMissingGraph), 1u);
  EXPECT_EQ(stats.dropped.at(kDropMissingClass), 1u);
}

TEST(Dataset, InstancesRoundTrip) {
  const UmlGraph g = shop_graph();
  const GraphLookup lookup = [&](const std::string&) { return &g; };
  PreprocessStats stats;
  const auto inst = *preprocess_record(record("Returns the cart total."), lookup, stats);
  const std::string path = ::testing::TempDir() + "/instances_roundtrip.jsonl";
  save_instances({inst, inst}, path);
  const auto back = load_instances(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], inst);
  for (const auto& list : {inst.code_tokens, inst.sbt_tokens, inst.summary_tokens, inst.class_name_tokens})
    for (const auto& t : list) EXPECT_TRUE(is_sentinel(t) || !has_upper(t)) << t;
}
