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
// Log-linear reranking, magnitude-based model selection and oracle
// analysis. Every selection breaks ties towards the lowest rank.

#ifndef NBKD_RERANK_HPP_
#define NBKD_RERANK_HPP_

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nbkd/corpus.hpp"
#include "nbkd/linear.hpp"
#include "nbkd/metrics.hpp"

namespace nbkd {

struct RerankResult {
  std::vector<Rank> selections;
  std::vector<std::string> selected_texts;
  std::optional<BleuScore> corpus_score;
};

struct SelectionMask {
  std::vector<std::string> active;
  std::size_t k = 0;

  bool contains(std::string_view name) const;
};

inline constexpr std::size_t kDefaultTopKModels = 5;

// The min(k, M) features with the largest |weight|; equal magnitudes are
// ordered by name. `active` is returned in that ranking order.
SelectionMask select_models(const WeightVector &weights, std::size_t k);

// Weights with every feature outside `mask` set to zero.
WeightVector apply_mask(const WeightVector &weights, const SelectionMask &mask);

RerankResult rerank(const FeatureMatrix &matrix, const NBestCorpus &corpus,
                    const WeightVector &weights, const SelectionMask *mask = nullptr,
                    const ReferenceSet *refs = nullptr);

enum class OracleMode { kOracle, kAntiOracle };

OracleMode parse_oracle_mode(std::string_view name);

// Greedy per-sentence best (or worst) hypothesis by smoothed sentence BLEU.
RerankResult oracle_select(const NBestCorpus &corpus, const ReferenceSet &refs, OracleMode mode);

struct SweepRow {
  std::size_t n = 0;
  double anti_oracle = 0.0;
  double top1 = 0.0;
  double oracle = 0.0;
  std::size_t short_lists = 0;  // lists holding fewer than n hypotheses
};

std::vector<SweepRow> beam_sweep(const NBestCorpus &corpus, const ReferenceSet &refs,
                                 const std::vector<std::size_t> &sizes);

// `N\tANTI\tTOP1\tORACLE` with two decimals, one row per line.
void write_sweep(std::ostream &out, const std::vector<SweepRow> &rows);

// `SID\tRANK\tTEXT` per sentence.
void write_selections(std::ostream &out, const RerankResult &result);

}  // namespace nbkd

#endif  // NBKD_RERANK_HPP_
