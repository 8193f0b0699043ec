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

#include "nbkd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nbkd/util.hpp"

namespace nbkd {

namespace {

void replace_all(std::string &s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

bool is_digit(char32_t c) { return c >= U'0' && c <= U'9'; }
bool is_period_comma(char32_t c) { return c == U'.' || c == U','; }

// [\{-\~\[-\` -\&\(-\+\:-\@\/]
bool is_13a_symbol(char32_t c) {
  return (c >= U'{' && c <= U'~') || (c >= U'[' && c <= U'`') || (c >= U' ' && c <= U'&') ||
         (c >= U'(' && c <= U'+') || (c >= U':' && c <= U'@') || c == U'/';
}

// The pairwise rules are applied as non-overlapping left-to-right scans,
// the same way a regex substitution walks the string.
template <typename First, typename Second>
std::u32string pair_rule(const std::u32string &s, First first, Second second, bool space_before,
                         bool space_between, bool space_after) {
  std::u32string out;
  out.reserve(s.size() + s.size() / 2);
  std::size_t i = 0;
  while (i < s.size()) {
    if (i + 1 < s.size() && first(s[i]) && second(s[i + 1])) {
      if (space_before) out.push_back(U' ');
      out.push_back(s[i]);
      if (space_between) out.push_back(U' ');
      out.push_back(s[i + 1]);
      if (space_after) out.push_back(U' ');
      i += 2;
    } else {
      out.push_back(s[i]);
      ++i;
    }
  }
  return out;
}

std::string ngram_key(const Tokens &tokens, std::size_t start, std::size_t n) {
  std::string key = tokens[start];
  for (std::size_t k = 1; k < n; ++k) {
    key.push_back(' ');
    key += tokens[start + k];
  }
  return key;
}

std::unordered_map<std::string, std::int64_t> count_ngrams(const Tokens &tokens) {
  std::unordered_map<std::string, std::int64_t> counts;
  for (std::size_t n = 1; n <= static_cast<std::size_t>(kBleuMaxOrder); ++n)
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) ++counts[ngram_key(tokens, i, n)];
  return counts;
}

double log_or_floor(double p) {
  return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
}

}  // namespace

Tokens tokenize_13a(std::string_view text) {
  std::string line(text);
  replace_all(line, "<skipped>", "");
  replace_all(line, "-\n", "");
  replace_all(line, "\n", " ");
  if (line.find('&') != std::string::npos) {
    replace_all(line, "&quot;", "\"");
    replace_all(line, "&amp;", "&");
    replace_all(line, "&lt;", "<");
    replace_all(line, "&gt;", ">");
  }

  std::u32string s = U" " + detail::utf8_decode(line) + U" ";

  std::u32string spaced;
  spaced.reserve(s.size() * 2);
  for (char32_t c : s) {
    if (is_13a_symbol(c)) {
      spaced.push_back(U' ');
      spaced.push_back(c);
      spaced.push_back(U' ');
    } else {
      spaced.push_back(c);
    }
  }
  auto not_digit = [](char32_t c) { return !is_digit(c); };
  // period/comma unless preceded by a digit
  s = pair_rule(spaced, not_digit, is_period_comma, false, true, true);
  // period/comma unless followed by a digit
  s = pair_rule(s, is_period_comma, not_digit, true, true, false);
  // dash after a digit
  s = pair_rule(s, is_digit, [](char32_t c) { return c == U'-'; }, false, true, true);

  Tokens tokens;
  std::u32string current;
  for (char32_t c : s) {
    if (detail::is_unicode_space(c)) {
      if (!current.empty()) {
        tokens.push_back(detail::utf8_encode(current));
        current.clear();
      }
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) tokens.push_back(detail::utf8_encode(current));
  return tokens;
}

NGramStats &NGramStats::operator+=(const NGramStats &o) {
  for (int i = 0; i < kBleuMaxOrder; ++i) {
    clipped_matches[i] += o.clipped_matches[i];
    hyp_ngrams[i] += o.hyp_ngrams[i];
  }
  hyp_len += o.hyp_len;
  ref_len += o.ref_len;
  return *this;
}

BleuReference::BleuReference(std::span<const Tokens> refs) {
  if (refs.empty()) throw Error("BLEU needs at least one reference");
  for (const auto &ref : refs) {
    lengths_.push_back(static_cast<std::int64_t>(ref.size()));
    for (const auto &[key, count] : count_ngrams(ref)) {
      auto &slot = max_counts_[key];
      slot = std::max(slot, count);
    }
  }
}

BleuReference BleuReference::from_text(std::span<const std::string> refs) {
  std::vector<Tokens> tokenized;
  tokenized.reserve(refs.size());
  for (const auto &r : refs) tokenized.push_back(tokenize_13a(r));
  return BleuReference(tokenized);
}

NGramStats BleuReference::stats(const Tokens &hyp) const {
  NGramStats st;
  st.hyp_len = static_cast<std::int64_t>(hyp.size());
  for (int o = 0; o < kBleuMaxOrder; ++o)
    st.hyp_ngrams[o] = std::max<std::int64_t>(0, st.hyp_len - o);
  for (const auto &[key, count] : count_ngrams(hyp)) {
    auto it = max_counts_.find(key);
    if (it == max_counts_.end()) continue;
    auto order = static_cast<std::size_t>(std::count(key.begin(), key.end(), ' '));
    st.clipped_matches[order] += std::min(count, it->second);
  }
  std::int64_t best = lengths_.front();
  for (auto len : lengths_) {
    auto d = std::llabs(len - st.hyp_len), bd = std::llabs(best - st.hyp_len);
    if (d < bd || (d == bd && len < best)) best = len;
  }
  st.ref_len = best;
  return st;
}

NGramStats sentence_stats(const Tokens &hyp, std::span<const Tokens> refs) {
  return BleuReference(refs).stats(hyp);
}

BleuScore corpus_bleu(const NGramStats &stats, Smoothing smoothing) {
  BleuScore score;
  if (stats.hyp_len == 0) {
    score.brevity_penalty = stats.ref_len == 0 ? 1.0 : 0.0;
    return score;
  }
  double log_sum = 0.0;
  int orders = 0;
  double smooth = 1.0;
  for (int o = 0; o < kBleuMaxOrder; ++o) {
    if (stats.hyp_ngrams[o] == 0) break;
    auto total = static_cast<double>(stats.hyp_ngrams[o]);
    double p;
    if (stats.clipped_matches[o] == 0 && smoothing == Smoothing::kExp) {
      smooth *= 2.0;
      p = 1.0 / (smooth * total);
    } else {
      p = static_cast<double>(stats.clipped_matches[o]) / total;
    }
    score.precisions[o] = p;
    log_sum += log_or_floor(p);
    ++orders;
  }
  double ratio = static_cast<double>(stats.ref_len) / static_cast<double>(stats.hyp_len);
  score.brevity_penalty = stats.hyp_len < stats.ref_len ? std::exp(1.0 - ratio) : 1.0;
  double geo = std::exp(log_sum / orders);
  score.value = 100.0 * score.brevity_penalty * geo;
  return score;
}

double sentence_bleu(std::string_view hyp, std::span<const std::string> refs, Smoothing smoothing) {
  return corpus_bleu(BleuReference::from_text(refs).stats(tokenize_13a(hyp)), smoothing).value;
}

BleuScore corpus_bleu(std::span<const std::string> hyps, const ReferenceSet &refs,
                      Smoothing smoothing) {
  if (hyps.size() != refs.size())
    throw ValidationError("hypothesis/reference count mismatch " + std::to_string(hyps.size()) +
                          " vs " + std::to_string(refs.size()));
  NGramStats total;
  for (std::size_t i = 0; i < hyps.size(); ++i)
    total += BleuReference::from_text(refs.refs(i)).stats(tokenize_13a(hyps[i]));
  return corpus_bleu(total, smoothing);
}

std::string bleu_signature(std::size_t nrefs, Smoothing smoothing) {
  return "nrefs:" + std::to_string(nrefs) + "|case:mixed|eff:no|tok:13a|smooth:" +
         (smoothing == Smoothing::kExp ? "exp" : "none");
}

// chrF ------------------------------------------------------------------

ChrFStats &ChrFStats::operator+=(const ChrFStats &o) {
  for (int i = 0; i < kChrfCharOrder; ++i) {
    hyp_ngrams[i] += o.hyp_ngrams[i];
    ref_ngrams[i] += o.ref_ngrams[i];
    matches[i] += o.matches[i];
  }
  return *this;
}

std::u32string chrf_normalize(std::string_view text) {
  std::u32string out;
  bool pending_space = false;
  for (char32_t c : detail::utf8_decode(text)) {
    if (detail::is_unicode_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

CharNGramProfile::CharNGramProfile(std::string_view text) {
  auto chars = chrf_normalize(text);
  for (std::size_t n = 1; n <= static_cast<std::size_t>(kChrfCharOrder); ++n) {
    auto &counts = counts_[n - 1];
    for (std::size_t i = 0; i + n <= chars.size(); ++i) ++counts[chars.substr(i, n)];
    totals_[n - 1] = chars.size() >= n ? static_cast<std::int64_t>(chars.size() - n + 1) : 0;
  }
}

ChrFStats CharNGramProfile::compare(const CharNGramProfile &hyp, const CharNGramProfile &ref) {
  ChrFStats st;
  for (int o = 0; o < kChrfCharOrder; ++o) {
    st.hyp_ngrams[o] = hyp.totals_[o];
    st.ref_ngrams[o] = ref.totals_[o];
    const auto &small = hyp.counts_[o].size() <= ref.counts_[o].size() ? hyp.counts_[o] : ref.counts_[o];
    const auto &large = &small == &hyp.counts_[o] ? ref.counts_[o] : hyp.counts_[o];
    for (const auto &[gram, count] : small) {
      auto it = large.find(gram);
      if (it != large.end()) st.matches[o] += std::min(count, it->second);
    }
  }
  return st;
}

ChrFStats chrf_stats(std::string_view hyp, std::string_view ref) {
  return CharNGramProfile::compare(CharNGramProfile(hyp), CharNGramProfile(ref));
}

ChrFScore chrf_from_stats(const ChrFStats &stats) {
  ChrFScore score;
  double precision = 0.0, recall = 0.0;
  int effective = 0;
  for (int o = 0; o < kChrfCharOrder; ++o) {
    if (stats.hyp_ngrams[o] > 0 && stats.ref_ngrams[o] > 0) {
      precision += static_cast<double>(stats.matches[o]) / static_cast<double>(stats.hyp_ngrams[o]);
      recall += static_cast<double>(stats.matches[o]) / static_cast<double>(stats.ref_ngrams[o]);
      ++effective;
    }
  }
  if (effective == 0) return score;
  precision /= effective;
  recall /= effective;
  if (precision + recall == 0.0) return score;
  double b2 = kChrfBeta * kChrfBeta;
  score.value = 100.0 * (1.0 + b2) * precision * recall / (b2 * precision + recall);
  return score;
}

ChrFStats best_chrf_stats(std::string_view hyp, std::span<const std::string> refs) {
  if (refs.empty()) throw Error("chrF needs at least one reference");
  CharNGramProfile hp(hyp);
  ChrFStats best;
  double best_value = -1.0;
  for (const auto &r : refs) {
    auto st = CharNGramProfile::compare(hp, CharNGramProfile(r));
    double v = chrf_from_stats(st).value;
    if (v > best_value) {
      best_value = v;
      best = st;
    }
  }
  return best;
}

ChrFScore sentence_chrf(std::string_view hyp, std::span<const std::string> refs) {
  return chrf_from_stats(best_chrf_stats(hyp, refs));
}

ChrFScore corpus_chrf(std::span<const std::string> hyps, const ReferenceSet &refs) {
  if (hyps.size() != refs.size())
    throw ValidationError("hypothesis/reference count mismatch " + std::to_string(hyps.size()) +
                          " vs " + std::to_string(refs.size()));
  ChrFStats total;
  for (std::size_t i = 0; i < hyps.size(); ++i) total += best_chrf_stats(hyps[i], refs.refs(i));
  return chrf_from_stats(total);
}

std::string chrf_signature(std::size_t nrefs) {
  return "nrefs:" + std::to_string(nrefs) + "|case:mixed|eff:yes|nc:" +
         std::to_string(kChrfCharOrder) + "|nw:0|space:collapsed";
}

}  // namespace nbkd
