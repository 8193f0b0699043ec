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
// BLEU and chrF compatible with sacreBLEU's `tok:13a|smooth:exp|eff:no`
// BLEU and its pure character chrF (beta 2, order 6).
//
// BLEU conventions:
//  - Reference n-gram counts are the per-n-gram maximum over references;
//    the reference length is the one closest to the hypothesis length,
//    shorter on ties.
//  - Orders with no hypothesis n-grams are left out of the geometric mean.
//  - `smooth:exp` replaces a zero-match precision with 1 / (2^j * total),
//    where j counts the zero-match orders seen so far.

#ifndef NBKD_METRICS_HPP_
#define NBKD_METRICS_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nbkd/corpus.hpp"

namespace nbkd {

using Tokens = std::vector<std::string>;

inline constexpr int kBleuMaxOrder = 4;
inline constexpr int kChrfCharOrder = 6;
inline constexpr double kChrfBeta = 2.0;

Tokens tokenize_13a(std::string_view text);

struct NGramStats {
  std::array<std::int64_t, kBleuMaxOrder> clipped_matches{};
  std::array<std::int64_t, kBleuMaxOrder> hyp_ngrams{};
  std::int64_t hyp_len = 0;
  std::int64_t ref_len = 0;

  NGramStats &operator+=(const NGramStats &o);
  friend NGramStats operator+(NGramStats a, const NGramStats &b) { return a += b; }
  bool operator==(const NGramStats &) const = default;
};

enum class Smoothing { kExp, kNone };

struct BleuScore {
  double value = 0.0;
  std::array<double, kBleuMaxOrder> precisions{};
  double brevity_penalty = 0.0;
};

// Tokenized references for one sentence, reduced to what BLEU needs.
class BleuReference {
 public:
  explicit BleuReference(std::span<const Tokens> refs);
  static BleuReference from_text(std::span<const std::string> refs);

  NGramStats stats(const Tokens &hyp) const;

 private:
  std::unordered_map<std::string, std::int64_t> max_counts_;
  std::vector<std::int64_t> lengths_;
};

NGramStats sentence_stats(const Tokens &hyp, std::span<const Tokens> refs);

BleuScore corpus_bleu(const NGramStats &stats, Smoothing smoothing = Smoothing::kExp);

double sentence_bleu(std::string_view hyp, std::span<const std::string> refs,
                     Smoothing smoothing = Smoothing::kExp);

// Corpus BLEU of `hyps[i]` against `refs.refs(i)`.
BleuScore corpus_bleu(std::span<const std::string> hyps, const ReferenceSet &refs,
                      Smoothing smoothing = Smoothing::kExp);

std::string bleu_signature(std::size_t nrefs, Smoothing smoothing = Smoothing::kExp);

// chrF ------------------------------------------------------------------

struct ChrFStats {
  std::array<std::int64_t, kChrfCharOrder> hyp_ngrams{};
  std::array<std::int64_t, kChrfCharOrder> ref_ngrams{};
  std::array<std::int64_t, kChrfCharOrder> matches{};

  ChrFStats &operator+=(const ChrFStats &o);
  bool operator==(const ChrFStats &) const = default;
};

struct ChrFScore {
  double value = 0.0;
  double beta = kChrfBeta;
  int char_order = kChrfCharOrder;
};

// Whitespace runs become one space; leading and trailing space is dropped.
std::u32string chrf_normalize(std::string_view text);

// Character n-gram counts of one normalized string, orders 1..6.
class CharNGramProfile {
 public:
  explicit CharNGramProfile(std::string_view text);

  // Stats with `hyp` as hypothesis and `ref` as reference.
  static ChrFStats compare(const CharNGramProfile &hyp, const CharNGramProfile &ref);

 private:
  std::array<std::unordered_map<std::u32string, std::int64_t>, kChrfCharOrder> counts_;
  std::array<std::int64_t, kChrfCharOrder> totals_{};
};

ChrFStats chrf_stats(std::string_view hyp, std::string_view ref);

// P and R are averaged over the orders where both sides have n-grams.
ChrFScore chrf_from_stats(const ChrFStats &stats);

// With several references the best-scoring one is used (first on ties).
ChrFScore sentence_chrf(std::string_view hyp, std::span<const std::string> refs);
ChrFStats best_chrf_stats(std::string_view hyp, std::span<const std::string> refs);

ChrFScore corpus_chrf(std::span<const std::string> hyps, const ReferenceSet &refs);

std::string chrf_signature(std::size_t nrefs);

}  // namespace nbkd

#endif  // NBKD_METRICS_HPP_
