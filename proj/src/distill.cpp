// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nbkd/distill.hpp"

namespace nbkd {

Strategy parse_strategy(std::string_view name) {
  if (name == "kd" || name == "kd_top1") return Strategy::kKdTop1;
  if (name == "ki") return Strategy::kKi;
  if (name == "rerank") return Strategy::kRerank;
  throw Error("unknown strategy '" + std::string(name) + "'");
}

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kKdTop1: return "kd";
    case Strategy::kKi: return "ki";
    case Strategy::kRerank: return "rerank";
  }
  return {};
}

PseudoLabelSet kd_top1(const NBestCorpus &corpus) {
  PseudoLabelSet out;
  out.strategy = Strategy::kKdTop1;
  out.provenance = "rank 0 of each n-best list";
  for (std::size_t s = 0; s < corpus.size(); ++s) out.labels.emplace(s, corpus.list(s).front().text);
  return out;
}

PseudoLabelSet ki_select(const NBestCorpus &corpus, const ReferenceSet &original_refs) {
  if (original_refs.size() != corpus.size())
    throw ValidationError("n-best corpus has " + std::to_string(corpus.size()) +
                          " sentences, original labels cover " +
                          std::to_string(original_refs.size()));
  auto picked = oracle_select(corpus, original_refs, OracleMode::kOracle);
  PseudoLabelSet out;
  out.strategy = Strategy::kKi;
  out.provenance = "best sentence BLEU against " + std::to_string(original_refs.max_refs()) +
                   " original reference(s)";
  for (std::size_t s = 0; s < picked.selected_texts.size(); ++s)
    out.labels.emplace(s, picked.selected_texts[s]);
  return out;
}

PseudoLabelSet rerank_labels(const FeatureMatrix &matrix, const NBestCorpus &corpus,
                             const WeightVector &weights, const SelectionMask *mask) {
  auto result = rerank(matrix, corpus, weights, mask);
  PseudoLabelSet out;
  out.strategy = Strategy::kRerank;
  out.provenance = "log-linear rerank over " + std::to_string(matrix.cols()) + " features";
  if (mask) {
    out.provenance += ", active:";
    for (const auto &n : mask->active) out.provenance += " " + n;
  }
  for (std::size_t s = 0; s < result.selected_texts.size(); ++s)
    out.labels.emplace(s, result.selected_texts[s]);
  return out;
}

TransferMode parse_transfer_mode(std::string_view name) {
  if (name == "bitext_only" || name == "bitext") return TransferMode::kBitextOnly;
  if (name == "bitext_plus_mono" || name == "bitext+mono") return TransferMode::kBitextPlusMono;
  if (name == "mono_only" || name == "mono") return TransferMode::kMonoOnly;
  throw Error("unknown transfer mode '" + std::string(name) + "'");
}

namespace {

void append(TransferSet &out, const LabeledSources &block, const char *what) {
  if (block.labels.labels.size() != block.sources.size())
    throw ValidationError(std::string(what) + " set has " + std::to_string(block.sources.size()) +
                          " sources but " + std::to_string(block.labels.labels.size()) +
                          " labels");
  for (std::size_t s = 0; s < block.sources.size(); ++s) {
    auto it = block.labels.labels.find(s);
    if (it == block.labels.labels.end())
      throw ValidationError(std::string(what) + " set is missing a label for sentence " +
                            std::to_string(s));
    out.labels.emplace(out.sources.size(), it->second);
    out.sources.push_back(block.sources[s]);
  }
}

}  // namespace

TransferSet mix_transfer_sets(const std::optional<LabeledSources> &bitext,
                              const std::optional<LabeledSources> &mono, TransferMode mode) {
  bool want_bitext = mode != TransferMode::kMonoOnly;
  bool want_mono = mode != TransferMode::kBitextOnly;
  if (want_bitext && !bitext) throw Error("transfer mode needs a bitext set");
  if (want_mono && !mono) throw Error("transfer mode needs a monolingual set");
  TransferSet out;
  if (want_bitext) append(out, *bitext, "bitext");
  if (want_mono) append(out, *mono, "monolingual");
  return out;
}

}  // namespace nbkd
