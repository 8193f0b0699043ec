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

#include "nbkd/rerank.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "nbkd/mira.hpp"

namespace nbkd {

bool SelectionMask::contains(std::string_view name) const {
  return std::find(active.begin(), active.end(), name) != active.end();
}

SelectionMask select_models(const WeightVector &weights, std::size_t k) {
  if (k == 0) throw Error("model selection needs k >= 1");
  std::vector<std::size_t> idx(weights.feature_names.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    double wa = std::abs(weights.weights(static_cast<Eigen::Index>(a)));
    double wb = std::abs(weights.weights(static_cast<Eigen::Index>(b)));
    if (wa != wb) return wa > wb;
    return weights.feature_names[a] < weights.feature_names[b];
  });
  SelectionMask mask;
  mask.k = k;
  for (std::size_t i = 0; i < std::min(k, idx.size()); ++i)
    mask.active.push_back(weights.feature_names[idx[i]]);
  return mask;
}

WeightVector apply_mask(const WeightVector &weights, const SelectionMask &mask) {
  for (const auto &name : mask.active)
    if (!weights.weight(name))
      throw ValidationError("mask names unknown feature '" + name + "'");
  WeightVector out = weights;
  for (std::size_t i = 0; i < out.feature_names.size(); ++i)
    if (!mask.contains(out.feature_names[i])) out.weights(static_cast<Eigen::Index>(i)) = 0.0;
  return out;
}

RerankResult rerank(const FeatureMatrix &matrix, const NBestCorpus &corpus,
                    const WeightVector &weights, const SelectionMask *mask,
                    const ReferenceSet *refs) {
  matrix.check_aligned(corpus);
  auto w = weights.aligned_to(matrix.feature_names);

  RerankResult result;
  if (mask) {
    // Inactive columns are dropped outright rather than multiplied by zero,
    // so their values never reach the dot product.
    std::vector<Eigen::Index> cols;
    for (std::size_t i = 0; i < w.feature_names.size(); ++i)
      if (mask->contains(w.feature_names[i])) cols.push_back(static_cast<Eigen::Index>(i));
    for (const auto &name : mask->active)
      if (!w.weight(name)) throw ValidationError("mask names unknown feature '" + name + "'");
    Eigen::VectorXd sub_w = w.weights(cols);
    for (const auto &block : matrix.values)
      result.selections.push_back(static_cast<Rank>(best_row(block(Eigen::all, cols), sub_w)));
  } else {
    for (const auto &block : matrix.values)
      result.selections.push_back(static_cast<Rank>(best_row(block, w.weights)));
  }
  for (std::size_t s = 0; s < result.selections.size(); ++s)
    result.selected_texts.push_back(corpus.list(s)[result.selections[s]].text);
  if (refs) result.corpus_score = corpus_bleu(result.selected_texts, *refs);
  return result;
}

OracleMode parse_oracle_mode(std::string_view name) {
  if (name == "oracle") return OracleMode::kOracle;
  if (name == "anti" || name == "anti_oracle" || name == "anti-oracle")
    return OracleMode::kAntiOracle;
  throw Error("unknown oracle mode '" + std::string(name) + "'");
}

namespace {

struct SentenceGains {
  std::vector<Eigen::VectorXd> gains;
  HypothesisStats stats;
};

SentenceGains sentence_gains(const NBestCorpus &corpus, const ReferenceSet &refs) {
  SentenceGains out{{}, hypothesis_stats(corpus, refs)};
  for (const auto &st : out.stats) {
    Eigen::VectorXd g(static_cast<Eigen::Index>(st.size()));
    for (std::size_t r = 0; r < st.size(); ++r)
      g(static_cast<Eigen::Index>(r)) = corpus_bleu(st[r]).value;
    out.gains.push_back(std::move(g));
  }
  return out;
}

// Picks within the first `n` ranks of each list.
double corpus_score_of(const SentenceGains &sg, std::size_t n, OracleMode mode, bool top1,
                       std::vector<Rank> *picks = nullptr) {
  NGramStats total;
  for (std::size_t s = 0; s < sg.gains.size(); ++s) {
    auto avail = std::min<Eigen::Index>(static_cast<Eigen::Index>(n), sg.gains[s].size());
    auto head = sg.gains[s].head(avail);
    Eigen::Index pick = top1 ? 0 : (mode == OracleMode::kOracle ? first_argmax(head)
                                                                 : first_argmin(head));
    if (picks) picks->push_back(static_cast<Rank>(pick));
    total += sg.stats[s][static_cast<std::size_t>(pick)];
  }
  return corpus_bleu(total).value;
}

}  // namespace

RerankResult oracle_select(const NBestCorpus &corpus, const ReferenceSet &refs, OracleMode mode) {
  auto sg = sentence_gains(corpus, refs);
  RerankResult result;
  corpus_score_of(sg, corpus.n_max(), mode, false, &result.selections);
  NGramStats total;
  for (std::size_t s = 0; s < result.selections.size(); ++s) {
    result.selected_texts.push_back(corpus.list(s)[result.selections[s]].text);
    total += sg.stats[s][result.selections[s]];
  }
  result.corpus_score = corpus_bleu(total);
  return result;
}

std::vector<SweepRow> beam_sweep(const NBestCorpus &corpus, const ReferenceSet &refs,
                                 const std::vector<std::size_t> &sizes) {
  if (sizes.empty()) throw Error("beam sweep needs at least one size");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] == 0) throw Error("beam sizes must be positive");
    if (i > 0 && sizes[i] < sizes[i - 1]) throw Error("beam sizes must be non-decreasing");
  }
  auto sg = sentence_gains(corpus, refs);
  std::vector<SweepRow> rows;
  for (auto n : sizes) {
    SweepRow row;
    row.n = n;
    row.anti_oracle = corpus_score_of(sg, n, OracleMode::kAntiOracle, false);
    row.top1 = corpus_score_of(sg, n, OracleMode::kOracle, true);
    row.oracle = corpus_score_of(sg, n, OracleMode::kOracle, false);
    for (const auto &list : corpus.lists())
      if (list.size() < n) ++row.short_lists;
    rows.push_back(row);
  }
  return rows;
}

void write_sweep(std::ostream &out, const std::vector<SweepRow> &rows) {
  char buf[128];
  for (const auto &r : rows) {
    std::snprintf(buf, sizeof(buf), "%zu\t%.2f\t%.2f\t%.2f\n", r.n, r.anti_oracle, r.top1,
                  r.oracle);
    out << buf;
  }
}

void write_selections(std::ostream &out, const RerankResult &result) {
  for (std::size_t s = 0; s < result.selections.size(); ++s)
    out << s << '\t' << result.selections[s] << '\t' << result.selected_texts[s] << '\n';
}

}  // namespace nbkd
