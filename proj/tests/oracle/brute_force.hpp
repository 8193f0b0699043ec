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
// Test-only reference implementations. Nothing here calls into the
// library's metric or selection code: n-grams are materialized as token
// vectors, counts live in std::map, and the score formulas are written
// out with pow() instead of log-sum-exp. Input text is assumed to be
// whitespace-tokenized already (the synthetic corpora use a vocabulary on
// which 13a tokenization is plain whitespace splitting).

#ifndef NBKD_TESTS_BRUTE_FORCE_HPP_
#define NBKD_TESTS_BRUTE_FORCE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace oracle {

using Words = std::vector<std::string>;

inline Words words(const std::string &s) {
  std::istringstream in(s);
  Words out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

inline std::map<Words, long> ngram_counts(const Words &w, std::size_t n) {
  std::map<Words, long> out;
  if (w.size() < n) return out;
  for (std::size_t i = 0; i + n <= w.size(); ++i) out[Words(w.begin() + i, w.begin() + i + n)]++;
  return out;
}

struct Stats {
  long match[4] = {0, 0, 0, 0};
  long total[4] = {0, 0, 0, 0};
  long hyp_len = 0;
  long ref_len = 0;
};

inline Stats sentence_stats(const Words &hyp, const std::vector<Words> &refs) {
  Stats st;
  st.hyp_len = static_cast<long>(hyp.size());
  for (std::size_t n = 1; n <= 4; ++n) {
    auto h = ngram_counts(hyp, n);
    for (const auto &[gram, c] : h) {
      long best_ref = 0;
      for (const auto &r : refs) {
        auto rc = ngram_counts(r, n);
        auto it = rc.find(gram);
        if (it != rc.end()) best_ref = std::max(best_ref, it->second);
      }
      st.match[n - 1] += std::min(c, best_ref);
      st.total[n - 1] += c;
    }
  }
  // closest reference length, shorter one on ties
  long best = -1;
  for (const auto &r : refs) {
    long len = static_cast<long>(r.size());
    if (best < 0 || std::labs(len - st.hyp_len) < std::labs(best - st.hyp_len) ||
        (std::labs(len - st.hyp_len) == std::labs(best - st.hyp_len) && len < best))
      best = len;
  }
  st.ref_len = best;
  return st;
}

inline void add(Stats &a, const Stats &b) {
  for (int i = 0; i < 4; ++i) {
    a.match[i] += b.match[i];
    a.total[i] += b.total[i];
  }
  a.hyp_len += b.hyp_len;
  a.ref_len += b.ref_len;
}

// BLEU with exponential smoothing; orders without hypothesis n-grams are
// left out of the geometric mean.
inline double bleu(const Stats &st, bool smooth = true) {
  if (st.hyp_len == 0) return 0.0;
  double product = 1.0;
  int orders = 0;
  int zero_runs = 0;
  for (int o = 0; o < 4; ++o) {
    if (st.total[o] == 0) continue;
    double p;
    if (st.match[o] == 0 && smooth) {
      ++zero_runs;
      p = 1.0 / (std::pow(2.0, zero_runs) * static_cast<double>(st.total[o]));
    } else {
      p = static_cast<double>(st.match[o]) / static_cast<double>(st.total[o]);
    }
    product *= p;
    ++orders;
  }
  double bp = st.hyp_len >= st.ref_len
                  ? 1.0
                  : std::exp(1.0 - static_cast<double>(st.ref_len) / static_cast<double>(st.hyp_len));
  return 100.0 * bp * std::pow(product, 1.0 / orders);
}

inline double sentence_bleu(const std::string &hyp, const std::vector<std::string> &refs) {
  std::vector<Words> r;
  for (const auto &s : refs) r.push_back(words(s));
  return bleu(sentence_stats(words(hyp), r));
}

// chrF -------------------------------------------------------------------

// ASCII-only whitespace handling; the synthetic chrF inputs are ASCII.
inline std::string collapse_spaces(const std::string &s) {
  std::string out;
  for (char c : s) {
    bool space = c == ' ' || c == '\t';
    if (space) {
      if (!out.empty() && out.back() != ' ') out.push_back(' ');
    } else {
      out.push_back(c);
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

struct ChrStats {
  long hyp[6] = {};
  long ref[6] = {};
  long match[6] = {};
};

inline ChrStats chr_stats(const std::string &hyp_raw, const std::string &ref_raw) {
  auto hyp = collapse_spaces(hyp_raw), ref = collapse_spaces(ref_raw);
  ChrStats st;
  for (std::size_t n = 1; n <= 6; ++n) {
    std::map<std::string, long> hc, rc;
    for (std::size_t i = 0; i + n <= hyp.size(); ++i) hc[hyp.substr(i, n)]++;
    for (std::size_t i = 0; i + n <= ref.size(); ++i) rc[ref.substr(i, n)]++;
    for (const auto &[g, c] : hc) {
      st.hyp[n - 1] += c;
      if (rc.count(g)) st.match[n - 1] += std::min(c, rc[g]);
    }
    for (const auto &[g, c] : rc) st.ref[n - 1] += c;
  }
  return st;
}

inline double chrf(const ChrStats &st) {
  double p = 0, r = 0;
  int k = 0;
  for (int o = 0; o < 6; ++o) {
    if (st.hyp[o] == 0 || st.ref[o] == 0) continue;
    p += static_cast<double>(st.match[o]) / static_cast<double>(st.hyp[o]);
    r += static_cast<double>(st.match[o]) / static_cast<double>(st.ref[o]);
    ++k;
  }
  if (k == 0) return 0.0;
  p /= k;
  r /= k;
  if (p + r == 0) return 0.0;
  return 100.0 * 5.0 * p * r / (4.0 * p + r);
}

inline double sentence_chrf(const std::string &hyp, const std::vector<std::string> &refs) {
  double best = 0.0;
  for (const auto &r : refs) best = std::max(best, chrf(chr_stats(hyp, r)));
  return best;
}

// Selection ----------------------------------------------------------------

// Index of the maximum of `scores`, lowest index on ties, by plain scan.
inline std::size_t argmax(const std::vector<double> &scores) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

inline std::size_t argmin(const std::vector<double> &scores) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (scores[i] < scores[best]) best = i;
  return best;
}

}  // namespace oracle

#endif  // NBKD_TESTS_BRUTE_FORCE_HPP_
