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
// Batch k-best MIRA over fixed n-best lists.
//
// Every hypothesis t gets a gain g(t), its smoothed sentence BLEU against
// the tune references. Each epoch visits the sentences in a seeded random
// order; per sentence
//
//   hope = argmax_t  w.f(t) + g(t)
//   fear = argmax_t  w.f(t) - g(t)
//   loss = (g(hope) - g(fear)) - w.(f(hope) - f(fear))
//
// and a positive loss moves w by min(c, loss / |df|^2) * df. The weights
// reported for an epoch are the mean of w over that epoch's visits; the
// tuned result is the best such mean by tune corpus BLEU, the initial
// weights (epoch 0) included.

#ifndef NBKD_MIRA_HPP_
#define NBKD_MIRA_HPP_

#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <vector>

#include "nbkd/corpus.hpp"
#include "nbkd/linear.hpp"
#include "nbkd/metrics.hpp"

namespace nbkd {

enum class InitMode {
  kDefault,  // 1.0 on "total" when that column exists, else zeros
  kZeros,
  kUniform,  // 1/M everywhere
  kGiven,
};

InitMode parse_init_mode(std::string_view name);

struct MiraConfig {
  double c = 0.01;
  int epochs = 30;
  std::uint64_t seed = 0;
  InitMode init = InitMode::kDefault;
  std::optional<WeightVector> given;

  void validate() const;
};

struct EpochRecord {
  WeightVector weights;
  double tune_bleu = 0.0;
};

struct TuneRun {
  WeightVector best_weights;
  std::vector<EpochRecord> history;  // history[0] is the initialization
  std::size_t best_epoch = 0;
  std::size_t updates = 0;
};

// Reported once per applied update.
struct UpdateEvent {
  std::size_t epoch;
  SentenceId sentence;
  Rank hope;
  Rank fear;
  double loss_before;  // margin violation before the step
  double loss_after;   // same pair, after the step
  double step;
  bool capped;         // step == c
};

using UpdateObserver = std::function<void(const UpdateEvent &)>;

// Per-hypothesis BLEU statistics against the sentence's references.
using HypothesisStats = std::vector<std::vector<NGramStats>>;

HypothesisStats hypothesis_stats(const NBestCorpus &corpus, const ReferenceSet &refs);

WeightVector initial_weights(const std::vector<std::string> &names, const MiraConfig &config);

// Per-sentence argmax of w.f, lowest rank on ties.
std::vector<Rank> select_by_weights(const FeatureMatrix &matrix, const WeightVector &weights);

BleuScore evaluate_weights(const FeatureMatrix &matrix, const HypothesisStats &stats,
                           const WeightVector &weights);
BleuScore evaluate_weights(const FeatureMatrix &matrix, const NBestCorpus &corpus,
                           const ReferenceSet &refs, const WeightVector &weights);

TuneRun tune_mira(const FeatureMatrix &matrix, const NBestCorpus &corpus, const ReferenceSet &refs,
                  const MiraConfig &config, const UpdateObserver &observer = {});

// `NAME\tWEIGHT` per feature, then `#best_epoch\tK\t#tune_bleu\tV` when
// `run` is given.
void write_weights(std::ostream &out, const WeightVector &weights,
                   const TuneRun *run = nullptr);
WeightVector read_weights(std::istream &in);
WeightVector read_weights(const std::filesystem::path &path);

}  // namespace nbkd

#endif  // NBKD_MIRA_HPP_
