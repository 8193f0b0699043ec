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
//
// \file
// Pseudo-label strategies:
//   kd      the teacher's rank-0 hypothesis
//   ki      the hypothesis closest to the original labels by sentence BLEU
//   rerank  the log-linear reranker's choice
// plus concatenation of labelled bitext and monolingual transfer sets.

#ifndef NBKD_DISTILL_HPP_
#define NBKD_DISTILL_HPP_

#include <map>
#include <optional>
#include <string>

#include "nbkd/corpus.hpp"
#include "nbkd/linear.hpp"
#include "nbkd/rerank.hpp"

namespace nbkd {

enum class Strategy { kKdTop1, kKi, kRerank };

Strategy parse_strategy(std::string_view name);
std::string strategy_name(Strategy s);

struct PseudoLabelSet {
  std::map<SentenceId, std::string> labels;
  Strategy strategy = Strategy::kKdTop1;
  std::string provenance;
};

PseudoLabelSet kd_top1(const NBestCorpus &corpus);

PseudoLabelSet ki_select(const NBestCorpus &corpus, const ReferenceSet &original_refs);

PseudoLabelSet rerank_labels(const FeatureMatrix &matrix, const NBestCorpus &corpus,
                             const WeightVector &weights, const SelectionMask *mask = nullptr);

struct LabeledSources {
  SourceCorpus sources;
  PseudoLabelSet labels;
};

enum class TransferMode { kBitextOnly, kBitextPlusMono, kMonoOnly };

TransferMode parse_transfer_mode(std::string_view name);

// Bitext block first, then mono; ids are renumbered from 0.
struct TransferSet {
  SourceCorpus sources;
  std::map<SentenceId, std::string> labels;
};

TransferSet mix_transfer_sets(const std::optional<LabeledSources> &bitext,
                              const std::optional<LabeledSources> &mono, TransferMode mode);

}  // namespace nbkd

#endif  // NBKD_DISTILL_HPP_
