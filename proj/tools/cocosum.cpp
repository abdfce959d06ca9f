#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cocosum/cli/commands.hpp"

namespace {

using namespace cocosum;

void add_common(CLI::App* sub, cli::CommonOptions& o, bool out_required = true) {
  sub->add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
  sub->add_option("--seed", o.seed, "random seed");
  auto* out = sub->add_option("--out", o.out, "output directory");
  if (out_required) out->required();
  sub->add_option("--max-len", o.max_len, "maximum summary length");
  sub->add_option("--radius", o.radius, "class subgraph radius");
  sub->add_option("--precision", o.precision, "single or double")->check(CLI::IsMember({"single", "double"}));
}

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("cocosum");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("COCOSUM_LOG")) spdlog::set_level(spdlog::level::from_str(level));
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Code summarization with class-level context"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  const cli::LogFn log = [](const std::string& line) {
    if (line.rfind("warning: ", 0) == 0) {
      spdlog::warn("{}", line.substr(9));
    } else {
      spdlog::info("{}", line);
    }
  };

  cli::CommonOptions common;

  std::string project, graph_id;
  auto* extract = app.add_subcommand("extract-uml", "build the class graph of a Java project");
  extract->add_option("--project", project, "project source directory")->required();
  extract->add_option("--graph-id", graph_id, "graph id (default: directory name)");
  add_common(extract, common);

  std::string raw, graphs;
  auto* preprocess = app.add_subcommand("preprocess", "filter and tokenize raw records");
  preprocess->add_option("--input", raw, "raw dataset (JSON lines)")->required()->check(CLI::ExistingFile);
  preprocess->add_option("--graphs", graphs, "directory of graph files")->required();
  add_common(preprocess, common);

  std::string instances;
  auto* vocab = app.add_subcommand("build-vocab", "build code, SBT and summary vocabularies");
  vocab->add_option("--instances", instances, "preprocessed instances")->required()->check(CLI::ExistingFile);
  add_common(vocab, common);

  cli::TrainOptions topts;
  auto* train = app.add_subcommand("train", "train a model");
  train->add_option("--instances", topts.instances, "training instances")->required()->check(CLI::ExistingFile);
  train->add_option("--validation", topts.validation, "validation instances")->check(CLI::ExistingFile);
  train->add_option("--graphs", topts.graphs, "directory of graph files")->required();
  train->add_option("--vocab", topts.vocab_dir, "vocabulary directory")->required();
  add_common(train, common);

  cli::SummarizeOptions sopts;
  auto* summarize = app.add_subcommand("summarize", "generate summaries with a checkpoint");
  summarize->add_option("--checkpoint", sopts.checkpoint, "checkpoint file")->required();
  summarize->add_option("--instances", sopts.instances, "instances to summarize")->required()->check(CLI::ExistingFile);
  summarize->add_option("--graphs", sopts.graphs, "directory of graph files")->required();
  add_common(summarize, common);

  std::string predictions, references;
  auto* evaluate = app.add_subcommand("evaluate", "score predictions against references");
  evaluate->add_option("--predictions", predictions, "predictions (JSON lines)")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--references", references, "references (JSON lines)")->required()->check(CLI::ExistingFile);
  add_common(evaluate, common);

  double eps = 1e-3;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the full model");
  gradcheck->add_option("--eps", eps, "central difference step");
  add_common(gradcheck, common, false);

  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (*extract) {
      cli::cmd_extract_uml(project, graph_id, common, log);
    } else if (*preprocess) {
      cli::cmd_preprocess(raw, graphs, common, log);
    } else if (*vocab) {
      cli::cmd_build_vocab(instances, common, log);
    } else if (*train) {
      cli::cmd_train(topts, common, log);
    } else if (*summarize) {
      cli::cmd_summarize(sopts, common, log);
    } else if (*evaluate) {
      std::cout << cli::cmd_evaluate(predictions, references, common, log).to_text();
    } else if (*gradcheck) {
      const auto o = cli::cmd_gradcheck(common, eps, log);
      std::cout << "max_rel_error " << o.report.max_rel_error << (o.passed ? " PASS" : " FAIL") << '\n';
      if (!o.passed) {
        std::cerr << nlohmann::json{{"error", "gradient check above tolerance"}, {"command", command}}.dump() << '\n';
        return 2;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", e.what()}, {"command", command}}.dump() << '\n';
    return 1;
  }
  return 0;
}
