#pragma once

#include <cstddef>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cocosum/metrics/bleu.hpp"
#include "cocosum/metrics/cider.hpp"
#include "cocosum/metrics/meteor.hpp"
#include "cocosum/metrics/rouge.hpp"

namespace cocosum {

struct EvalPair {
  Tokens candidate;
  Tokens reference;
};

/// BLEU-4, METEOR and ROUGE-L are sentence means scaled to percent; CIDEr
/// is the raw mean.
struct MetricReport {
  double bleu4 = 0.0;
  double meteor = 0.0;
  double rouge_l = 0.0;
  double cider = 0.0;
  std::size_t samples = 0;

  std::string to_text() const {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2) << "BLEU-4 " << bleu4 << "\nMETEOR " << meteor << "\nROUGE-L " << rouge_l
        << "\nCIDER " << cider << '\n';
    return out.str();
  }

  nlohmann::ordered_json to_json() const {
    return {{"BLEU-4", bleu4}, {"METEOR", meteor}, {"ROUGE-L", rouge_l}, {"CIDER", cider}, {"samples", samples}};
  }
};

inline MetricReport evaluate_pairs(const std::vector<EvalPair>& pairs) {
  MetricReport r;
  r.samples = pairs.size();
  if (pairs.empty()) return r;
  std::vector<Tokens> cands, refs;
  for (const auto& p : pairs) {
    r.bleu4 += bleu(p.candidate, p.reference, 4);
    r.meteor += meteor(p.candidate, p.reference);
    r.rouge_l += rouge_l(p.candidate, p.reference);
    cands.push_back(p.candidate);
    refs.push_back(p.reference);
  }
  const double n = static_cast<double>(pairs.size());
  r.bleu4 = 100.0 * r.bleu4 / n;
  r.meteor = 100.0 * r.meteor / n;
  r.rouge_l = 100.0 * r.rouge_l / n;
  r.cider = cider(cands, refs).mean;
  return r;
}

/// Reads "id" and "tokens" (or "summary_tokens") from each JSON line.
inline std::map<std::string, Tokens> load_token_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::map<std::string, Tokens> out;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto& id = j.at("id");
      const std::string key = id.is_string() ? id.get<std::string>() : id.dump();
      const auto& toks = j.contains("tokens") ? j.at("tokens") : j.at("summary_tokens");
      if (!out.emplace(key, toks.get<Tokens>()).second) {
        throw std::runtime_error("duplicate id " + key);
      }
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

/// Pairs predictions with references by id; every id must be on both sides.
inline std::vector<EvalPair> align_by_id(const std::map<std::string, Tokens>& predictions,
                                         const std::map<std::string, Tokens>& references) {
  std::vector<std::string> missing_pred, missing_ref;
  for (const auto& [id, t] : references) {
    if (!predictions.count(id)) missing_pred.push_back(id);
  }
  for (const auto& [id, t] : predictions) {
    if (!references.count(id)) missing_ref.push_back(id);
  }
  if (!missing_pred.empty() || !missing_ref.empty() || predictions.empty()) {
    std::string msg = "prediction/reference ids do not match";
    auto list = [&](const char* what, const std::vector<std::string>& ids) {
      if (ids.empty()) return;
      msg += std::string("; ") + what + ":";
      for (const auto& id : ids) msg += " " + id;
    };
    list("no prediction for", missing_pred);
    list("no reference for", missing_ref);
    if (predictions.empty() && references.empty()) msg += "; both files are empty";
    throw std::runtime_error(msg);
  }
  std::vector<EvalPair> pairs;
  for (const auto& [id, ref] : references) pairs.push_back({predictions.at(id), ref});
  return pairs;
}

inline MetricReport evaluate_corpus(const std::string& predictions_path, const std::string& references_path) {
  return evaluate_pairs(align_by_id(load_token_records(predictions_path), load_token_records(references_path)));
}

}  // namespace cocosum
