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
// N-best lists, parallel text, reference sets and external score tables,
// with the line-oriented readers and writers for each.

#ifndef NBKD_CORPUS_HPP_
#define NBKD_CORPUS_HPP_

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nbkd {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input; `line()` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string &what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Well-formed input that violates a cross-file contract.
class ValidationError : public Error {
 public:
  using Error::Error;
};

using SentenceId = std::size_t;
using Rank = std::size_t;

inline constexpr std::string_view kFieldSeparator = " ||| ";

struct NBestEntry {
  SentenceId sentence_id = 0;
  Rank rank = 0;
  std::string text;
  // Kept in file order so that write_nbest reproduces the feature field.
  std::vector<std::pair<std::string, double>> teacher_scores;
  double total = 0.0;

  std::optional<double> teacher_score(std::string_view name) const;
  bool operator==(const NBestEntry &) const = default;
};

class NBestCorpus {
 public:
  NBestCorpus() = default;
  // Checks density, non-emptiness and rank contiguity.
  explicit NBestCorpus(std::vector<std::vector<NBestEntry>> lists);

  std::size_t size() const { return lists_.size(); }
  bool empty() const { return lists_.empty(); }
  std::size_t n_max() const { return n_max_; }
  std::size_t total_hypotheses() const;

  const std::vector<NBestEntry> &list(SentenceId id) const { return lists_.at(id); }
  const std::vector<std::vector<NBestEntry>> &lists() const { return lists_; }
  std::vector<std::string> texts(SentenceId id) const;

  // Keeps the first `n` ranks of every list; shorter lists are kept whole.
  NBestCorpus truncated(std::size_t n) const;

  bool operator==(const NBestCorpus &) const = default;

 private:
  std::vector<std::vector<NBestEntry>> lists_;
  std::size_t n_max_ = 0;
};

// One source sentence per id.
using SourceCorpus = std::vector<std::string>;

class ReferenceSet {
 public:
  ReferenceSet() = default;
  explicit ReferenceSet(std::vector<std::vector<std::string>> refs);

  std::size_t size() const { return refs_.size(); }
  const std::vector<std::string> &refs(SentenceId id) const { return refs_.at(id); }
  const std::vector<std::vector<std::string>> &all() const { return refs_; }
  // Largest number of references attached to any sentence.
  std::size_t max_refs() const;

  bool operator==(const ReferenceSet &) const = default;

 private:
  std::vector<std::vector<std::string>> refs_;
};

struct ScoreKey {
  SentenceId sentence_id;
  Rank rank;
  auto operator<=>(const ScoreKey &) const = default;
};

struct ExternalScoreTable {
  std::string feature_name;
  std::map<ScoreKey, double> scores;

  // Throws ValidationError naming the first missing or extra key.
  void validate(const NBestCorpus &corpus) const;
  double at(SentenceId sid, Rank rank) const;
};

// Moses-style n-best: `SID ||| TEXT ||| NAME= VALUE ... ||| TOTAL`.
NBestCorpus load_nbest(std::istream &in);
NBestCorpus load_nbest(const std::filesystem::path &path);
void write_nbest(std::ostream &out, const NBestCorpus &corpus);

// `SID<TAB>RANK<TAB>SCORE` with no header.
ExternalScoreTable load_scores(std::istream &in, std::string feature_name);
ExternalScoreTable load_scores(const std::filesystem::path &path, std::string feature_name);
void write_scores(std::ostream &out, const ExternalScoreTable &table);

// Line i of each stream becomes sentence i.
std::pair<SourceCorpus, ReferenceSet> load_parallel(std::istream &source, std::istream &target);

// One sentence per line; empty lines are rejected.
std::vector<std::string> load_lines(std::istream &in);
std::vector<std::string> load_lines(const std::filesystem::path &path);

// Each file holds one reference per line. A blank line in the second or
// later file means that sentence has fewer references.
ReferenceSet load_references(const std::vector<std::filesystem::path> &paths);
ReferenceSet load_references(std::vector<std::istream *> streams);

enum class LabelFormat { kParallel, kTsv };

LabelFormat parse_label_format(std::string_view name);

// Parallel format writes to `source_out` and `target_out`; TSV writes
// `SOURCE<TAB>TARGET` lines to `source_out` only.
void write_pseudo_labels(const SourceCorpus &sources,
                         const std::map<SentenceId, std::string> &labels, LabelFormat format,
                         std::ostream &source_out, std::ostream *target_out);

// Writes `prefix.src` + `prefix.tgt`, or `prefix.tsv`. Returns the paths.
std::vector<std::filesystem::path> write_pseudo_labels(
    const SourceCorpus &sources, const std::map<SentenceId, std::string> &labels,
    LabelFormat format, const std::filesystem::path &prefix);

// Shortest decimal that parses back to the same double.
std::string format_double(double value);
// Strict decimal parse of the whole field; nullopt on junk or overflow.
std::optional<double> parse_double(std::string_view text);

}  // namespace nbkd

#endif  // NBKD_CORPUS_HPP_
