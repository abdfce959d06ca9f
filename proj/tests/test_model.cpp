#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cocosum/cli/commands.hpp"
#include "cocosum/grad_check.hpp"
#include "cocosum/model/model.hpp"
#include "cocosum/uml_extract.hpp"
#include "support.hpp"

using namespace cocosum;
using cocosum::testing::node_outputs;
using cocosum::testing::on_simplex;
using cocosum::testing::permute_nodes;
using cocosum::testing::random_input;
using cocosum::testing::small_config;

namespace {

std::vector<double> values(const Tensor<double>& t) { return to_doubles(t); }

void zero_all(ParamStore<double>& store) {
  for (auto& t : store.tensors()) {
    auto d = Tensor<double>(t).mutable_data();
    std::fill(d.begin(), d.end(), 0.0);
  }
}

double log_softmax_ce(const std::vector<double>& logits, std::size_t target) {
  long double m = logits[0];
  for (double x : logits) m = std::max<long double>(m, x);
  long double s = 0;
  for (double x : logits) s += std::exp(static_cast<long double>(x) - m);
  return static_cast<double>(-(static_cast<long double>(logits[target]) - m - std::log(s)));
}

}  // namespace

TEST(Gru, ZeroParametersAndZeroState) {
  Rng rng(1);
  ParamStore<double> store;
  auto p = GruParams<double>::create(store, "g", 3, 4, rng);
  zero_all(store);
  Tape<double> tape;
  auto emb = Tensor<double>::constant({5, 3}, std::vector<double>(15, 0.7));
  for (const auto& h : gru_forward(tape, {1, 2, 3}, emb, p, {}))
    for (double x : values(h)) EXPECT_EQ(x, 0.0);
}

TEST(Gru, ZeroParametersHalveTheState) {
  Rng rng(1);
  ParamStore<double> store;
  auto p = GruParams<double>::create(store, "g", 3, 4, rng);
  zero_all(store);
  Tape<double> tape;
  auto emb = Tensor<double>::constant({5, 3}, std::vector<double>(15, -1.3));
  const std::vector<double> v = {1.0, -2.0, 0.5, 8.0};
  const auto states = gru_forward(tape, {0, 4, 2, 1}, emb, p, Tensor<double>::vector(v));
  for (std::size_t t = 0; t < states.size(); ++t) {
    const double factor = std::ldexp(1.0, -static_cast<int>(t + 1));
    for (std::size_t k = 0; k < v.size(); ++k) EXPECT_DOUBLE_EQ(states[t].at(k), v[k] * factor);
  }
}

TEST(Gru, GradientsOverFourSteps) {
  Rng rng(4);
  ParamStore<double> store;
  auto p = GruParams<double>::create(store, "g", 3, 4, rng);
  for (auto& t : store.tensors()) {
    auto d = Tensor<double>(t).mutable_data();
    for (auto& x : d) x = uniform(rng, -0.8, 0.8);
  }
  auto emb = store.add("emb", {6, 3}, ParamStore<double>::Init::glorot, rng);
  auto params = store.tensors();
  const LossFn<double> f = [&](Tape<double>& tape) {
    const auto states = gru_forward(tape, {1, 5, 2, 1}, emb, p, {});
    return tape.sum(tape.hadamard(states.back(), states.back()));
  };
  EXPECT_LE(grad_check(f, params, 1e-5).max_rel_error, 1e-4);
}

TEST(ClassSemantic, MeanOfEmbeddings) {
  Tape<double> tape;
  auto emb = Tensor<double>::constant({3, 2}, {1, 2, 3, 4, 10, 20});
  auto identity = Tensor<double>::constant({2, 2}, {1, 0, 0, 1});
  EXPECT_EQ(values(class_semantic_embed(tape, {1}, emb, identity)), (std::vector<double>{3, 4}));
  EXPECT_EQ(values(class_semantic_embed(tape, {0, 2}, emb, identity)), (std::vector<double>{5.5, 11}));
  const auto a = values(class_semantic_embed(tape, {0, 1, 2}, emb, identity));
  const auto b = values(class_semantic_embed(tape, {2, 0, 1}, emb, identity));
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
}

TEST(ClassSemantic, PrecomputedVectorIsUsedVerbatim) {
  const auto c = small_config();
  Model<double> model(c, 3);
  std::vector<double> vec(c.class_embedding_dim);
  std::iota(vec.begin(), vec.end(), 0.25);
  model.set_class_vector("C0", vec);
  Tape<double> tape;
  EXPECT_EQ(values(model.class_semantic_embedding(tape, "C0", {7})), vec);
  EXPECT_NE(values(model.class_semantic_embedding(tape, "C1", {7})), vec);
  EXPECT_THROW(model.set_class_vector("C0", {1.0}), DimensionError);

  Rng rng(2);
  auto in = random_input(rng, c, 3);
  in.enclosing = 0;
  EXPECT_EQ(values(model.encode(tape, in).class_semantic), vec);
}

TEST(Mrgnn, IsolatedNodeAttendsToItself) {
  const auto c = small_config();
  Model<double> model(c, 5);
  Rng rng(5);
  auto in = random_input(rng, c, 1);
  in.adjacency = RelationalAdjacency::build(1, {});
  in.enclosing = 0;
  AttentionTrace trace;
  Tape<double> tape;
  model.encode(tape, in, {}, &trace);
  ASSERT_EQ(trace.inner.size(), c.mrgnn_layers * kNumRelations);
  for (const auto& a : trace.inner) EXPECT_EQ(a, (std::vector<double>{1.0}));
}

TEST(Mrgnn, IdenticalNeighboursShareAttention) {
  const auto c = small_config();
  Model<double> model(c, 6);
  ModelInput in = cli::tiny_fixture().input;
  in.node_names = {"A", "B"};
  in.node_name_ids = {{7, 9}, {7, 9}};
  in.adjacency = RelationalAdjacency::build(2, {{0, 1, Relation::association}});
  in.enclosing = 0;
  AttentionTrace trace;
  Tape<double> tape;
  model.encode(tape, in, {}, &trace);
  // Layout: layer, relation, node.
  for (std::size_t layer = 0; layer < c.mrgnn_layers; ++layer) {
    for (std::size_t r = 0; r < kNumRelations; ++r) {
      for (std::size_t node = 0; node < 2; ++node) {
        const auto& a = trace.inner[(layer * kNumRelations + r) * 2 + node];
        if (kRelations[r] == Relation::association) {
          ASSERT_EQ(a.size(), 2u);
          EXPECT_DOUBLE_EQ(a[0], 0.5);
          EXPECT_DOUBLE_EQ(a[1], 0.5);
        } else {
          EXPECT_EQ(a, (std::vector<double>{1.0}));
        }
      }
    }
  }
}

TEST(Mrgnn, GammaScalingKeepsArgmaxNeighbour) {
  auto c = small_config();
  c.mrgnn_layers = 1;
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    Model<double> model(c, 100 + trial);
    const auto in = random_input(rng, c, 8);
    AttentionTrace before, after;
    Tape<double> tape;
    model.encode(tape, in, {}, &before);
    const double k = 0.1 + 5.0 * uniform01(rng);
    for (auto& rel : model.params().mrgnn[0].relations) {
      for (auto* t : {&rel.attn_score, &rel.attn_score_bias})
        for (auto& x : t->mutable_data()) x *= k;
    }
    model.encode(tape, in, {}, &after);
    ASSERT_EQ(before.inner.size(), after.inner.size());
    for (std::size_t i = 0; i < before.inner.size(); ++i) {
      const auto& a = before.inner[i];
      const auto& b = after.inner[i];
      const auto best = std::max_element(a.begin(), a.end()) - a.begin();
      const auto top = *std::max_element(b.begin(), b.end());
      EXPECT_EQ(b[best], top);
    }
  }
}

TEST(Mrgnn, PermutationEquivariance) {
  const auto c = small_config();
  Rng rng(12);
  for (int trial = 0; trial < 25; ++trial) {
    Model<double> model(c, 200 + trial);
    const auto in = random_input(rng, c, 10);
    const std::size_t n = in.node_names.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    shuffle_in_place(perm, rng);
    const auto base = node_outputs(model, in);
    const auto moved = node_outputs(model, permute_nodes(in, perm));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < base[i].size(); ++k) EXPECT_NEAR(base[i][k], moved[perm[i]][k], 1e-6);
  }
}

TEST(Encode, NodesOutsideTheSubgraphDoNotMatter) {
  const UmlGraph project = extract_relations(scan_project(std::string(COCOSUM_TEST_DATA) + "/fig2"));
  UmlGraph trimmed;
  const std::size_t person = project.find_by_name("Person")->id;
  for (const auto& n : project.nodes())
    if (n.id != person) trimmed.add_node(n);
  for (const auto& e : project.edges())
    if (e.src != person && e.dst != person) trimmed.add_edge(e);

  Vocabularies vocabs;
  std::vector<std::vector<std::string>> names;
  for (const auto& n : project.nodes()) names.push_back(n.name_tokens);
  vocabs.code = Vocab::build(names, 100);
  auto c = small_config();
  c.subgraph_radius = 1;
  SummarizationInstance inst;
  inst.id = "v";
  inst.code_tokens = {"car"};
  inst.sbt_tokens = {"(", "car", ")", "car"};
  inst.summary_tokens = {"a", "b", "c"};
  inst.enclosing_class_node_id = project.find_by_name("Vehicle")->id;

  Model<double> model(c, 8);
  Tape<double> tape;
  const auto full = model.encode(tape, prepare_input(inst, project, vocabs, c));
  const auto cut = model.encode(tape, prepare_input(inst, trimmed, vocabs, c));
  EXPECT_EQ(values(full.class_relational), values(cut.class_relational));
  EXPECT_EQ(values(full.class_semantic), values(cut.class_semantic));
}

TEST(Encode, DeterministicWithoutDropout) {
  auto c = small_config();
  c.dropout = 0.4;
  Model<double> model(c, 1);
  Rng rng(1);
  const auto in = random_input(rng, c);
  Tape<double> tape;
  const auto a = model.encode(tape, in), b = model.encode(tape, in);
  EXPECT_EQ(values(a.class_relational), values(b.class_relational));
  EXPECT_EQ(values(a.code_matrix), values(b.code_matrix));
  Rng drop(3);
  const auto d = model.encode(tape, in, RunMode{&drop, 1.0});
  EXPECT_NE(values(a.code_matrix), values(d.code_matrix));
}

TEST(Decoder, AttentionFamiliesAreDistributions) {
  const auto c = small_config();
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    Model<double> model(c, trial);
    const auto in = random_input(rng, c);
    AttentionTrace trace;
    Tape<double> tape;
    model.loss(tape, in, {}, &trace);
    EXPECT_EQ(trace.channels.size(), in.summary_ids.size() + 1);
    for (const auto* family : {&trace.inner, &trace.outer, &trace.code, &trace.ast, &trace.channels})
      for (const auto& a : *family) EXPECT_TRUE(on_simplex(a));
    for (const auto& a : trace.outer) EXPECT_EQ(a.size(), kNumRelations);
    for (const auto& a : trace.channels) EXPECT_EQ(a.size(), 4u);
  }
}

TEST(Decoder, SingleCodeTokenGetsFullAttention) {
  const auto c = small_config();
  Model<double> model(c, 2);
  Rng rng(2);
  auto in = random_input(rng, c);
  in.code_ids = {9};
  AttentionTrace trace;
  Tape<double> tape;
  model.loss(tape, in, {}, &trace);
  for (const auto& a : trace.code) EXPECT_EQ(a, (std::vector<double>{1.0}));
}

TEST(Decoder, StepProbabilitiesOnSimplex) {
  const auto c = small_config();
  Model<double> model(c, 4);
  Rng rng(4);
  const auto in = random_input(rng, c);
  Tape<double> tape;
  const auto ctx = model.encode(tape, in);
  auto hidden = model.initial_hidden(ctx);
  for (std::size_t prev : {2u, 7u, 11u}) {
    auto step = model.decoder_step(tape, prev, hidden, ctx);
    EXPECT_EQ(step.probs.size(), c.summary_vocab);
    EXPECT_TRUE(on_simplex(values(step.probs)));
    hidden = step.hidden;
  }
  EXPECT_THROW(model.decoder_step(tape, c.summary_vocab, hidden, ctx), std::out_of_range);
}

TEST(Decoder, GradientOfDecoderParameters) {
  const auto f = cli::tiny_fixture();
  Model<double> model(f.config, 17);
  std::vector<Tensor<double>> params;
  for (const auto& [name, t] : model.store().entries())
    if (name.rfind("decoder", 0) == 0 || name == "summary_embedding") params.push_back(t);
  ASSERT_GT(params.size(), 10u);
  const LossFn<double> loss = [&](Tape<double>& tape) { return model.loss(tape, f.input); };
  // The channel alignment maps carry gradients near 1e-8; smaller steps are
  // dominated by rounding in the loss.
  EXPECT_LE(grad_check(loss, params, 1e-4).max_rel_error, 1e-4);
}

TEST(Loss, ClosedForms) {
  Tape<double> tape;
  const std::size_t v = 7;
  std::vector<Tensor<double>> uniform(3, Tensor<double>::constant({v}, std::vector<double>(v, 1.0 / v)));
  EXPECT_NEAR(sequence_loss(tape, uniform, {0, 3, 6}).item(), std::log(7.0), 1e-12);
  std::vector<Tensor<double>> certain;
  for (std::size_t t : {1u, 4u}) {
    std::vector<double> p(v, 0.0);
    p[t] = 1.0;
    certain.push_back(Tensor<double>::constant({v}, p));
  }
  EXPECT_EQ(sequence_loss(tape, certain, {1, 4}).item(), 0.0);
  EXPECT_NEAR(sequence_loss(tape, certain, {1, 5}).item(), -std::log(1e-12) / 2, 1e-9);
  EXPECT_THROW(sequence_loss(tape, certain, {1}), std::invalid_argument);
}

TEST(Loss, MatchesLogSoftmaxCrossEntropy) {
  Rng rng(30);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t v = 2 + uniform_index(rng, 20), steps = 1 + uniform_index(rng, 6);
    Tape<double> tape;
    std::vector<Tensor<double>> probs;
    std::vector<std::size_t> targets;
    double expected = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
      std::vector<double> logits(v);
      for (auto& x : logits) x = uniform(rng, -6.0, 6.0);
      targets.push_back(uniform_index(rng, v));
      expected += log_softmax_ce(logits, targets.back());
      probs.push_back(tape.softmax(Tensor<double>::vector(logits)));
    }
    EXPECT_NEAR(sequence_loss(tape, probs, targets).item(), expected / static_cast<double>(steps), 1e-10);
  }
}

TEST(Model, ArgmaxSkipsExcludedAndPrefersLowestIndex) {
  auto p = Tensor<double>::vector({0.4, 0.1, 0.4, 0.1});
  EXPECT_EQ(Model<double>::argmax(p), 0u);
  EXPECT_EQ(Model<double>::argmax(p, {0}), 2u);
}

TEST(Model, SameSeedSameParameters) {
  const auto c = small_config();
  Model<double> a(c, 42), b(c, 42), d(c, 43);
  ASSERT_EQ(a.store().size(), b.store().size());
  for (std::size_t i = 0; i < a.store().size(); ++i) {
    EXPECT_EQ(a.store().entries()[i].first, b.store().entries()[i].first);
    EXPECT_EQ(values(a.store().entries()[i].second), values(b.store().entries()[i].second));
  }
  EXPECT_NE(values(a.store().get("code_embedding")), values(d.store().get("code_embedding")));
}
