#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cocosum/dataset.hpp"
#include "cocosum/grad_check.hpp"
#include "cocosum/metrics/evaluate.hpp"
#include "cocosum/model/model.hpp"
#include "cocosum/train/checkpoint.hpp"
#include "cocosum/train/decode.hpp"
#include "cocosum/train/trainer.hpp"
#include "cocosum/uml.hpp"
#include "cocosum/uml_extract.hpp"
#include "cocosum/version.hpp"
#include "cocosum/vocab.hpp"

namespace cocosum::cli {

namespace fs = std::filesystem;

/// Receives progress and warning lines; the binary routes them to its logger.
using LogFn = std::function<void(const std::string&)>;

struct VocabCaps {
  std::size_t code = 10000;
  std::size_t sbt = 10000;
  std::size_t summary = 10000;
};

/// Everything a config file can set. Precedence: command-line flag, then
/// config file, then built-in default.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  VocabCaps vocab;
  std::string precision = "double";
};

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> max_len;
  std::optional<std::size_t> radius;
  std::optional<std::string> precision;
};

inline nlohmann::json run_config_to_json(const RunConfig& c) {
  return {{"model", c.model},
          {"train", c.train},
          {"vocab", {{"code", c.vocab.code}, {"sbt", c.vocab.sbt}, {"summary", c.vocab.summary}}},
          {"precision", c.precision}};
}

inline RunConfig resolve_config(const CommonOptions& opts) {
  RunConfig c;
  if (!opts.config_path.empty()) {
    std::ifstream in(opts.config_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read config file " + opts.config_path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error("config file " + opts.config_path + ": " + e.what());
    }
    if (j.contains("model")) c.model = j.at("model").get<ModelConfig>();
    if (j.contains("train")) c.train = j.at("train").get<TrainConfig>();
    if (j.contains("vocab")) {
      const auto& v = j.at("vocab");
      c.vocab.code = v.value("code", c.vocab.code);
      c.vocab.sbt = v.value("sbt", c.vocab.sbt);
      c.vocab.summary = v.value("summary", c.vocab.summary);
    }
    c.precision = j.value("precision", c.precision);
  }
  if (opts.seed) c.train.seed = *opts.seed;
  if (opts.radius) c.model.subgraph_radius = *opts.radius;
  if (opts.max_len) c.model.max_summary_len = *opts.max_len;
  if (opts.precision) c.precision = *opts.precision;
  if (c.precision != "single" && c.precision != "double") {
    throw std::invalid_argument("precision must be single or double, got " + c.precision);
  }
  return c;
}

inline fs::path prepare_out(const std::string& out) {
  if (out.empty()) throw std::invalid_argument("--out is required");
  fs::create_directories(out);
  return fs::path(out);
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

/// manifest-<command>.json beside the command's outputs. It holds no clock
/// values so reruns give identical bytes.
inline void write_manifest(const fs::path& out, const std::string& command, const CommonOptions& opts,
                           const RunConfig& config, const nlohmann::json& inputs, const nlohmann::json& outputs) {
  nlohmann::ordered_json m;
  m["command"] = command;
  m["tool_version"] = kVersion;
  m["config_file"] = opts.config_path;
  m["seed"] = config.train.seed;
  m["config"] = run_config_to_json(config);
  m["inputs"] = inputs;
  m["outputs"] = outputs;
  write_text(out / ("manifest-" + command + ".json"), m.dump(2) + "\n");
}

/// Every *.json graph file in dir, keyed by file stem.
inline std::map<std::string, UmlGraph> load_graph_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("graph directory " + dir + " does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json" && e.path().filename().string().rfind("manifest-", 0) != 0)
      files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::map<std::string, UmlGraph> graphs;
  for (const auto& f : files) graphs.emplace(f.stem().string(), load_graph(f.string()));
  return graphs;
}

// ---- extract-uml ------------------------------------------------------------

struct ExtractResult {
  UmlGraph graph;
  fs::path graph_path;
};

inline ExtractResult cmd_extract_uml(const std::string& project_dir, const std::string& graph_id,
                                     const CommonOptions& opts, const LogFn& log = {}) {
  const auto config = resolve_config(opts);
  if (!fs::is_directory(project_dir)) throw std::runtime_error("project directory " + project_dir + " does not exist");
  const auto out = prepare_out(opts.out);
  const auto index = scan_project(project_dir);
  if (log) {
    for (const auto& w : index.warnings()) log("warning: " + w);
  }
  ExtractResult r;
  r.graph = extract_relations(index);
  if (r.graph.nodes().empty() && log) log("warning: no class declarations found under " + project_dir);
  const std::string id = graph_id.empty() ? fs::path(project_dir).lexically_normal().filename().string() : graph_id;
  if (id.empty()) throw std::invalid_argument("cannot derive a graph id from " + project_dir + "; pass --graph-id");
  r.graph_path = out / (id + ".json");
  save_graph(r.graph, r.graph_path.string());
  if (log) {
    std::ostringstream s;
    s << id << ": " << r.graph.nodes().size() << " nodes, " << r.graph.edges().size() << " edges";
    for (auto rel : kRelations) s << ", " << relation_name(rel) << " " << r.graph.edge_count(rel);
    log(s.str());
  }
  write_manifest(out, "extract-uml", opts, config, {{"project", project_dir}}, {{"graph", r.graph_path.string()}});
  return r;
}

// ---- preprocess -------------------------------------------------------------

struct PreprocessResult {
  std::vector<SummarizationInstance> instances;
  PreprocessStats stats;
  fs::path instances_path;
};

inline nlohmann::json stats_to_json(const PreprocessStats& s) {
  return {{"read", s.read}, {"kept", s.kept}, {"dropped", s.dropped}};
}

inline PreprocessResult cmd_preprocess(const std::string& raw_path, const std::string& graph_dir,
                                       const CommonOptions& opts, const LogFn& log = {}) {
  const auto config = resolve_config(opts);
  std::ifstream in(raw_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read dataset " + raw_path);
  const auto graphs = load_graph_dir(graph_dir);
  const auto out = prepare_out(opts.out);
  const GraphLookup lookup = [&](const std::string& id) -> const UmlGraph* {
    auto it = graphs.find(id);
    return it == graphs.end() ? nullptr : &it->second;
  };
  PreprocessResult r;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++r.stats.read;
    RawRecord raw;
    try {
      raw = raw_record_from_json(nlohmann::json::parse(line));
    } catch (const std::exception& e) {
      ++r.stats.dropped[kDropMalformed];
      if (log) log("warning: " + raw_path + ":" + std::to_string(line_no) + ": malformed record: " + e.what());
      continue;
    }
    if (auto s = preprocess_record(raw, lookup, r.stats)) r.instances.push_back(std::move(*s));
  }
  r.instances_path = out / "instances.jsonl";
  save_instances(r.instances, r.instances_path.string());
  const auto stats_path = out / "preprocess_stats.json";
  write_text(stats_path, stats_to_json(r.stats).dump(2) + "\n");
  if (log) {
    std::string msg = "kept " + std::to_string(r.stats.kept) + " of " + std::to_string(r.stats.read) + " records";
    for (const auto& [reason, n] : r.stats.dropped) msg += "; dropped " + std::to_string(n) + " (" + reason + ")";
    log(msg);
  }
  write_manifest(out, "preprocess", opts, config, {{"dataset", raw_path}, {"graphs", graph_dir}},
                 {{"instances", r.instances_path.string()}, {"stats", stats_path.string()}});
  return r;
}

// ---- build-vocab ------------------------------------------------------------

inline Vocabularies load_vocab_dir(const std::string& dir) {
  const fs::path d(dir);
  return {Vocab::load((d / "code.vocab").string()), Vocab::load((d / "sbt.vocab").string()),
          Vocab::load((d / "summary.vocab").string())};
}

inline Vocabularies cmd_build_vocab(const std::string& instances_path, const CommonOptions& opts,
                                    const LogFn& log = {}) {
  const auto config = resolve_config(opts);
  const auto items = load_instances(instances_path);
  if (items.empty()) throw std::runtime_error("no instances in " + instances_path);
  const auto out = prepare_out(opts.out);
  std::vector<std::vector<std::string>> code, sbt, summary;
  for (const auto& s : items) {
    // Class-name subtokens share the code vocabulary.
    code.push_back(s.code_tokens);
    code.push_back(s.class_name_tokens);
    sbt.push_back(s.sbt_tokens);
    summary.push_back(s.summary_tokens);
  }
  Vocabularies v{Vocab::build(code, config.vocab.code), Vocab::build(sbt, config.vocab.sbt),
                 Vocab::build(summary, config.vocab.summary)};
  v.code.save((out / "code.vocab").string());
  v.sbt.save((out / "sbt.vocab").string());
  v.summary.save((out / "summary.vocab").string());
  if (log) {
    log("vocabulary sizes: code " + std::to_string(v.code.size()) + ", sbt " + std::to_string(v.sbt.size()) +
        ", summary " + std::to_string(v.summary.size()));
  }
  write_manifest(out, "build-vocab", opts, config, {{"instances", instances_path}},
                 {{"code", (out / "code.vocab").string()},
                  {"sbt", (out / "sbt.vocab").string()},
                  {"summary", (out / "summary.vocab").string()}});
  return v;
}

// ---- train ------------------------------------------------------------------

/// Maps instances to model inputs; every instance's graph must be present.
inline std::vector<ModelInput> prepare_inputs(const std::vector<SummarizationInstance>& items,
                                              const std::map<std::string, UmlGraph>& graphs,
                                              const Vocabularies& vocabs, const ModelConfig& config) {
  std::vector<ModelInput> inputs;
  inputs.reserve(items.size());
  for (const auto& s : items) {
    auto it = graphs.find(s.uml_graph_id);
    if (it == graphs.end()) throw std::runtime_error("instance " + s.id + " references missing graph " + s.uml_graph_id);
    inputs.push_back(prepare_input(s, it->second, vocabs, config));
  }
  return inputs;
}

struct TrainOptions {
  std::string instances;
  std::string validation;  // optional
  std::string graphs;
  std::string vocab_dir;
};

struct TrainSummary {
  std::vector<EpochLoss> log;
  fs::path checkpoint_path;
};

template <typename T>
TrainSummary train_with(const TrainOptions& t, const RunConfig& config, const Vocabularies& vocabs,
                        const fs::path& out, const LogFn& log) {
  ModelConfig mc = config.model;
  mc.code_vocab = vocabs.code.size();
  mc.sbt_vocab = vocabs.sbt.size();
  mc.summary_vocab = vocabs.summary.size();
  const auto graphs = load_graph_dir(t.graphs);
  const auto train_set = prepare_inputs(load_instances(t.instances), graphs, vocabs, mc);
  std::vector<ModelInput> val_set;
  if (!t.validation.empty()) val_set = prepare_inputs(load_instances(t.validation), graphs, vocabs, mc);
  if (train_set.empty()) throw std::runtime_error("no training instances in " + t.instances);

  Model<T> model(mc, config.train.seed);
  auto result = train(model, train_set, val_set, config.train, vocabs, [&](const EpochLoss& e) {
    if (log) {
      std::ostringstream s;
      s << "epoch " << e.epoch << " train_loss " << e.train_loss << " val_loss " << e.val_loss;
      log(s.str());
    }
  });
  TrainSummary summary;
  summary.log = result.log;
  summary.checkpoint_path = out / "checkpoint.bin";
  save_checkpoint(result.best, summary.checkpoint_path.string());
  write_text(out / "loss_log.txt", format_loss_log(result.log));
  return summary;
}

inline TrainSummary cmd_train(const TrainOptions& t, const CommonOptions& opts, const LogFn& log = {}) {
  const auto config = resolve_config(opts);
  config.train.validate();
  const auto vocabs = load_vocab_dir(t.vocab_dir);
  const auto out = prepare_out(opts.out);
  auto summary = config.precision == "single" ? train_with<float>(t, config, vocabs, out, log)
                                              : train_with<double>(t, config, vocabs, out, log);
  write_manifest(out, "train", opts, config,
                 {{"instances", t.instances}, {"validation", t.validation}, {"graphs", t.graphs}, {"vocab", t.vocab_dir}},
                 {{"checkpoint", summary.checkpoint_path.string()}, {"loss_log", (out / "loss_log.txt").string()}});
  return summary;
}

// ---- summarize --------------------------------------------------------------

struct SummarizeOptions {
  std::string checkpoint;
  std::string instances;
  std::string graphs;
};

struct Prediction {
  std::string id;
  std::vector<std::string> tokens;
};

template <typename T>
std::vector<Prediction> summarize_with(const Checkpoint& ckpt, const std::vector<SummarizationInstance>& items,
                                       const std::map<std::string, UmlGraph>& graphs, const ModelConfig& mc,
                                       std::size_t max_len) {
  Model<T> model(ckpt.model, 0);
  load_parameters(model, ckpt);
  std::vector<Prediction> preds;
  for (const auto& s : items) {
    auto it = graphs.find(s.uml_graph_id);
    if (it == graphs.end()) throw std::runtime_error("instance " + s.id + " references missing graph " + s.uml_graph_id);
    const auto in = prepare_input(s, it->second, ckpt.vocabs, mc);
    preds.push_back({s.id, ckpt.vocabs.summary.decode(greedy_decode(model, in, max_len))});
  }
  return preds;
}

inline std::vector<Prediction> cmd_summarize(const SummarizeOptions& s, const CommonOptions& opts,
                                             const LogFn& log = {}) {
  if (!fs::is_regular_file(s.checkpoint)) throw std::runtime_error("checkpoint not found: " + s.checkpoint);
  const auto ckpt = load_checkpoint(s.checkpoint);
  auto config = resolve_config(opts);
  config.model = ckpt.model;
  if (opts.radius) config.model.subgraph_radius = *opts.radius;
  const std::size_t max_len = opts.max_len.value_or(ckpt.model.max_summary_len);
  const auto items = load_instances(s.instances);
  const auto graphs = load_graph_dir(s.graphs);
  const auto out = prepare_out(opts.out);
  auto preds = ckpt.dtype() == DType::f32 ? summarize_with<float>(ckpt, items, graphs, config.model, max_len)
                                          : summarize_with<double>(ckpt, items, graphs, config.model, max_len);
  std::string text;
  for (const auto& p : preds) text += nlohmann::json{{"id", p.id}, {"tokens", p.tokens}}.dump() + "\n";
  const auto path = out / "predictions.jsonl";
  write_text(path, text);
  if (log) log("wrote " + std::to_string(preds.size()) + " summaries to " + path.string());
  config.precision = ckpt.dtype() == DType::f32 ? "single" : "double";
  write_manifest(out, "summarize", opts, config,
                 {{"checkpoint", s.checkpoint}, {"instances", s.instances}, {"graphs", s.graphs}},
                 {{"predictions", path.string()}, {"max_len", max_len}});
  return preds;
}

// ---- evaluate ---------------------------------------------------------------

inline MetricReport cmd_evaluate(const std::string& predictions, const std::string& references,
                                 const CommonOptions& opts, const LogFn& log = {}) {
  const auto config = resolve_config(opts);
  const auto report = evaluate_corpus(predictions, references);
  const auto out = prepare_out(opts.out);
  write_text(out / "report.txt", report.to_text());
  write_text(out / "report.json", report.to_json().dump(2) + "\n");
  if (log) log("evaluated " + std::to_string(report.samples) + " samples");
  write_manifest(out, "evaluate", opts, config, {{"predictions", predictions}, {"references", references}},
                 {{"report", (out / "report.txt").string()}, {"report_json", (out / "report.json").string()}});
  return report;
}

// ---- gradcheck --------------------------------------------------------------

/// Four classes joined by one edge of each relation, a six-token method and
/// a ten-token SBT sequence.
struct GradCheckFixture {
  ModelConfig config;
  ModelInput input;
};

inline GradCheckFixture tiny_fixture() {
  GradCheckFixture f;
  auto& c = f.config;
  c.code_vocab = 12;
  c.sbt_vocab = 12;
  c.summary_vocab = 10;
  c.embedding_dim = 4;
  c.gru_hidden = 5;
  c.class_embedding_dim = 6;
  c.mrgnn_hidden = 4;
  c.dropout = 0.0;
  auto& in = f.input;
  in.code_ids = {6, 7, 8, 9, 10, 11};
  in.sbt_ids = {6, 7, 6, 8, 8, 9, 10, 9, 7, 11};
  in.summary_ids = {6, 7, 8};
  in.node_names = {"Vehicle", "Car", "Engine", "Person"};
  in.node_name_ids = {{6}, {7, 8}, {9}, {10, 11}};
  in.adjacency = RelationalAdjacency::build(4, {{1, 0, Relation::realization},
                                                {1, 2, Relation::generalization},
                                                {3, 1, Relation::dependency},
                                                {3, 2, Relation::association}});
  in.enclosing = 1;
  return f;
}

struct GradCheckOutcome {
  GradCheckReport report;
  std::string worst_parameter;
  double tolerance = 1e-4;
  bool passed = false;
};

/// Full-model check in double precision. Central differences use a step of
/// 1e-3: a few graph weights carry gradients near 1e-9, where smaller steps
/// are dominated by rounding in the loss.
inline GradCheckOutcome run_gradcheck(std::uint64_t seed, double eps = 1e-3, double tolerance = 1e-4) {
  const auto f = tiny_fixture();
  Model<double> model(f.config, seed);
  auto params = model.store().tensors();
  const LossFn<double> loss = [&](Tape<double>& tape) { return model.loss(tape, f.input); };
  GradCheckOutcome o;
  o.report = grad_check(loss, params, eps);
  o.worst_parameter = model.store().entries().at(o.report.param_index).first;
  o.tolerance = tolerance;
  o.passed = o.report.max_rel_error <= tolerance;
  return o;
}

inline GradCheckOutcome cmd_gradcheck(const CommonOptions& opts, double eps, const LogFn& log = {}) {
  const auto config = resolve_config(opts);
  auto o = run_gradcheck(config.train.seed, eps);
  std::ostringstream s;
  s << "max_rel_error " << o.report.max_rel_error << " over " << o.report.coordinates_checked << " coordinates (worst "
    << o.worst_parameter << "[" << o.report.coordinate << "])";
  if (log) log(s.str());
  if (!opts.out.empty()) {
    const auto out = prepare_out(opts.out);
    nlohmann::ordered_json r{{"max_rel_error", o.report.max_rel_error},
                             {"coordinates", o.report.coordinates_checked},
                             {"worst_parameter", o.worst_parameter},
                             {"worst_coordinate", o.report.coordinate},
                             {"eps", eps},
                             {"tolerance", o.tolerance},
                             {"passed", o.passed}};
    write_text(out / "gradcheck.json", r.dump(2) + "\n");
    write_manifest(out, "gradcheck", opts, config, nlohmann::json::object(),
                   {{"report", (out / "gradcheck.json").string()}});
  }
  return o;
}

}  // namespace cocosum::cli
