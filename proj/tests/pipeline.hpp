#pragma once

// Runs the sample project through every command into a fresh directory.

#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "cocosum/cli/commands.hpp"

namespace cocosum::testing {

namespace fs = std::filesystem;

inline std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Relative path -> contents for every file below root.
inline std::map<std::string, std::string> tree_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = file_bytes(e.path());
  return out;
}

struct PipelineRun {
  fs::path root;
  cli::PreprocessResult preprocess;
  cli::TrainSummary train;
  std::vector<cli::Prediction> predictions;
};

/// extract-uml -> preprocess -> build-vocab -> train -> summarize on the
/// bundled sample data, each command writing to its own root/<name>.
inline PipelineRun run_sample_pipeline(const fs::path& root, std::uint64_t seed = 1, std::size_t epochs = 5) {
  const std::string sample = COCOSUM_SAMPLE_DATA;
  fs::remove_all(root);
  auto opts = [&](const char* sub) {
    cli::CommonOptions o;
    o.config_path = sample + "/config.json";
    o.seed = seed;
    o.out = (root / sub).string();
    return o;
  };
  PipelineRun run;
  run.root = root;
  cli::cmd_extract_uml(sample + "/project/shop", "", opts("graphs"));
  run.preprocess = cli::cmd_preprocess(sample + "/raw.jsonl", (root / "graphs").string(), opts("preprocess"));
  const std::string instances = (root / "preprocess" / "instances.jsonl").string();
  cli::cmd_build_vocab(instances, opts("vocab"));

  // The epoch count is not a flag, so it goes through a derived config file.
  auto cfg = nlohmann::json::parse(file_bytes(sample + "/config.json"));
  cfg["train"]["epochs"] = epochs;
  fs::create_directories(root / "config");
  cli::write_text(root / "config" / "config.json", cfg.dump(2) + "\n");
  auto train_opts = opts("train");
  train_opts.config_path = (root / "config" / "config.json").string();
  run.train = cli::cmd_train({instances, "", (root / "graphs").string(), (root / "vocab").string()}, train_opts);
  run.predictions = cli::cmd_summarize(
      {(root / "train" / "checkpoint.bin").string(), instances, (root / "graphs").string()}, opts("summarize"));
  return run;
}

}  // namespace cocosum::testing
