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

#include "nbkd/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "nbkd/util.hpp"

namespace nbkd {

ParseError::ParseError(std::size_t line, const std::string &what)
    : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

std::optional<double> NBestEntry::teacher_score(std::string_view name) const {
  for (const auto &[key, value] : teacher_scores)
    if (key == name) return value;
  return std::nullopt;
}

NBestCorpus::NBestCorpus(std::vector<std::vector<NBestEntry>> lists) : lists_(std::move(lists)) {
  for (std::size_t sid = 0; sid < lists_.size(); ++sid) {
    const auto &list = lists_[sid];
    if (list.empty()) throw ValidationError("empty n-best list for sentence " + std::to_string(sid));
    for (std::size_t r = 0; r < list.size(); ++r) {
      if (list[r].sentence_id != sid || list[r].rank != r)
        throw ValidationError("entry (" + std::to_string(list[r].sentence_id) + "," +
                              std::to_string(list[r].rank) + ") stored at (" + std::to_string(sid) +
                              "," + std::to_string(r) + ")");
      if (list[r].text.find('\n') != std::string::npos ||
          list[r].text.find("|||") != std::string::npos)
        throw ValidationError("hypothesis text at (" + std::to_string(sid) + "," +
                              std::to_string(r) + ") contains a newline or '|||'");
    }
    n_max_ = std::max(n_max_, list.size());
  }
}

std::size_t NBestCorpus::total_hypotheses() const {
  std::size_t total = 0;
  for (const auto &list : lists_) total += list.size();
  return total;
}

std::vector<std::string> NBestCorpus::texts(SentenceId id) const {
  std::vector<std::string> out;
  for (const auto &e : lists_.at(id)) out.push_back(e.text);
  return out;
}

NBestCorpus NBestCorpus::truncated(std::size_t n) const {
  if (n == 0) throw Error("cannot truncate n-best lists to zero entries");
  std::vector<std::vector<NBestEntry>> cut;
  cut.reserve(lists_.size());
  for (const auto &list : lists_)
    cut.emplace_back(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(std::min(n, list.size())));
  return NBestCorpus(std::move(cut));
}

ReferenceSet::ReferenceSet(std::vector<std::vector<std::string>> refs) : refs_(std::move(refs)) {
  for (std::size_t sid = 0; sid < refs_.size(); ++sid) {
    if (refs_[sid].empty())
      throw ValidationError("no reference for sentence " + std::to_string(sid));
    for (const auto &r : refs_[sid])
      if (detail::trim(r).empty())
        throw ValidationError("blank reference for sentence " + std::to_string(sid));
  }
}

std::size_t ReferenceSet::max_refs() const {
  std::size_t k = 0;
  for (const auto &r : refs_) k = std::max(k, r.size());
  return k;
}

void ExternalScoreTable::validate(const NBestCorpus &corpus) const {
  std::set<ScoreKey> expected;
  for (const auto &list : corpus.lists())
    for (const auto &e : list) expected.insert({e.sentence_id, e.rank});
  auto describe = [](const ScoreKey &k) {
    return "(" + std::to_string(k.sentence_id) + "," + std::to_string(k.rank) + ")";
  };
  for (const auto &key : expected)
    if (!scores.contains(key))
      throw ValidationError("score table '" + feature_name + "': missing " + describe(key));
  for (const auto &[key, value] : scores)
    if (!expected.contains(key))
      throw ValidationError("score table '" + feature_name + "': extra " + describe(key));
}

double ExternalScoreTable::at(SentenceId sid, Rank rank) const {
  auto it = scores.find({sid, rank});
  if (it == scores.end())
    throw ValidationError("score table '" + feature_name + "': missing (" + std::to_string(sid) +
                          "," + std::to_string(rank) + ")");
  return it->second;
}

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view text) {
  if (text.empty()) return std::nullopt;
  // from_chars also accepts inf/nan spellings; only plain decimals pass here.
  for (char c : text)
    if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '+' ||
          c == 'e' || c == 'E'))
      return std::nullopt;
  double value = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

namespace {

std::vector<std::string_view> split_on(std::string_view line, std::string_view sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(line.substr(start));
      return parts;
    }
    parts.push_back(line.substr(start, pos - start));
    start = pos + sep.size();
  }
}

std::ifstream open_input(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

std::vector<std::string> read_raw_lines(std::istream &in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

NBestCorpus load_nbest(std::istream &in) {
  std::vector<std::vector<NBestEntry>> lists;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto fields = split_on(line, kFieldSeparator);
    if (fields.size() != 4)
      throw ParseError(lineno, "expected 4 ' ||| '-separated fields, found " +
                                   std::to_string(fields.size()));
    auto sid = detail::parse_index(fields[0]);
    if (!sid) throw ParseError(lineno, "bad sentence id '" + std::string(fields[0]) + "'");
    if (fields[1].find("|||") != std::string_view::npos)
      throw ParseError(lineno, "hypothesis text contains '|||'");

    NBestEntry entry;
    entry.sentence_id = *sid;
    entry.text = std::string(fields[1]);

    auto tokens = fields[2].empty() ? std::vector<std::string_view>{} : split_on(fields[2], " ");
    for (std::size_t i = 0; i < tokens.size(); i += 2) {
      auto name = tokens[i];
      if (name.size() < 2 || name.back() != '=' || i + 1 >= tokens.size())
        throw ParseError(lineno, "malformed score field near '" + std::string(name) + "'");
      name.remove_suffix(1);
      auto value = parse_double(tokens[i + 1]);
      if (!value)
        throw ParseError(lineno, "bad value '" + std::string(tokens[i + 1]) + "' for " +
                                     std::string(name));
      if (entry.teacher_score(name))
        throw ParseError(lineno, "score '" + std::string(name) + "' repeated");
      entry.teacher_scores.emplace_back(std::string(name), *value);
    }
    auto total = parse_double(fields[3]);
    if (!total) throw ParseError(lineno, "bad total '" + std::string(fields[3]) + "'");
    entry.total = *total;

    if (lists.empty() || *sid != lists.size() - 1) {
      if (*sid != lists.size())
        throw ParseError(lineno, "non-dense sentence ids: expected " +
                                     std::to_string(lists.size()) + ", got " + std::to_string(*sid));
      lists.emplace_back();
    }
    entry.rank = lists.back().size();
    lists.back().push_back(std::move(entry));
  }
  if (lists.empty()) throw ParseError(0, "no sentences");
  return NBestCorpus(std::move(lists));
}

NBestCorpus load_nbest(const std::filesystem::path &path) {
  auto in = open_input(path);
  try {
    return load_nbest(in);
  } catch (const ParseError &e) {
    throw ParseError(e.line(), path.string() + ": " + e.what());
  }
}

void write_nbest(std::ostream &out, const NBestCorpus &corpus) {
  for (const auto &list : corpus.lists()) {
    for (const auto &e : list) {
      out << e.sentence_id << kFieldSeparator << e.text << kFieldSeparator;
      for (std::size_t i = 0; i < e.teacher_scores.size(); ++i) {
        if (i > 0) out << ' ';
        out << e.teacher_scores[i].first << "= " << format_double(e.teacher_scores[i].second);
      }
      out << kFieldSeparator << format_double(e.total) << '\n';
    }
  }
}

ExternalScoreTable load_scores(std::istream &in, std::string feature_name) {
  ExternalScoreTable table;
  table.feature_name = std::move(feature_name);
  std::set<ScoreKey> duplicates;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto fields = split_on(line, "\t");
    if (fields.size() != 3)
      throw ParseError(lineno, "expected SID<TAB>RANK<TAB>SCORE");
    for (int i = 0; i < 2; ++i)
      if (!fields[i].empty() && fields[i].front() == '-')
        throw ParseError(lineno, "negative index '" + std::string(fields[i]) + "'");
    auto sid = detail::parse_index(fields[0]);
    auto rank = detail::parse_index(fields[1]);
    if (!sid || !rank) throw ParseError(lineno, "bad sentence id or rank");
    auto score = parse_double(fields[2]);
    if (!score) throw ParseError(lineno, "unparseable score '" + std::string(fields[2]) + "'");
    if (!table.scores.emplace(ScoreKey{*sid, *rank}, *score).second)
      duplicates.insert({*sid, *rank});
  }
  if (!duplicates.empty()) {
    // Sorted key listing so the message does not depend on line order.
    std::string msg = "score table '" + table.feature_name + "': duplicate keys";
    for (const auto &k : duplicates)
      msg += " (" + std::to_string(k.sentence_id) + "," + std::to_string(k.rank) + ")";
    throw ValidationError(msg);
  }
  return table;
}

ExternalScoreTable load_scores(const std::filesystem::path &path, std::string feature_name) {
  auto in = open_input(path);
  try {
    return load_scores(in, std::move(feature_name));
  } catch (const ParseError &e) {
    throw ParseError(e.line(), path.string() + ": " + e.what());
  }
}

void write_scores(std::ostream &out, const ExternalScoreTable &table) {
  for (const auto &[key, value] : table.scores)
    out << key.sentence_id << '\t' << key.rank << '\t' << format_double(value) << '\n';
}

std::pair<SourceCorpus, ReferenceSet> load_parallel(std::istream &source, std::istream &target) {
  auto src = read_raw_lines(source);
  auto tgt = read_raw_lines(target);
  if (src.size() != tgt.size())
    throw ValidationError("line count mismatch " + std::to_string(src.size()) + " vs " +
                          std::to_string(tgt.size()));
  std::vector<std::vector<std::string>> refs;
  refs.reserve(tgt.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i].empty()) throw ParseError(i + 1, "empty source line");
    if (tgt[i].empty()) throw ParseError(i + 1, "empty target line");
    refs.push_back({std::move(tgt[i])});
  }
  return {std::move(src), ReferenceSet(std::move(refs))};
}

std::vector<std::string> load_lines(std::istream &in) {
  auto lines = read_raw_lines(in);
  for (std::size_t i = 0; i < lines.size(); ++i)
    if (lines[i].empty()) throw ParseError(i + 1, "empty line");
  return lines;
}

std::vector<std::string> load_lines(const std::filesystem::path &path) {
  auto in = open_input(path);
  try {
    return load_lines(in);
  } catch (const ParseError &e) {
    throw ParseError(e.line(), path.string() + ": " + e.what());
  }
}

ReferenceSet load_references(std::vector<std::istream *> streams) {
  if (streams.empty()) throw Error("no reference streams");
  std::vector<std::vector<std::string>> files;
  for (auto *s : streams) files.push_back(read_raw_lines(*s));
  for (std::size_t f = 1; f < files.size(); ++f)
    if (files[f].size() != files[0].size())
      throw ValidationError("line count mismatch " + std::to_string(files[0].size()) + " vs " +
                            std::to_string(files[f].size()));
  std::vector<std::vector<std::string>> refs(files[0].size());
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (detail::trim(files[0][i]).empty()) throw ParseError(i + 1, "empty reference line");
    for (const auto &file : files)
      if (!detail::trim(file[i]).empty()) refs[i].push_back(file[i]);
  }
  return ReferenceSet(std::move(refs));
}

ReferenceSet load_references(const std::vector<std::filesystem::path> &paths) {
  std::vector<std::ifstream> files;
  files.reserve(paths.size());
  for (const auto &p : paths) files.push_back(open_input(p));
  std::vector<std::istream *> streams;
  for (auto &f : files) streams.push_back(&f);
  return load_references(std::move(streams));
}

LabelFormat parse_label_format(std::string_view name) {
  if (name == "parallel" || name == "parallel-files") return LabelFormat::kParallel;
  if (name == "tsv") return LabelFormat::kTsv;
  throw Error("unknown label format '" + std::string(name) + "'");
}

void write_pseudo_labels(const SourceCorpus &sources,
                         const std::map<SentenceId, std::string> &labels, LabelFormat format,
                         std::ostream &source_out, std::ostream *target_out) {
  for (const auto &[sid, label] : labels)
    if (sid >= sources.size())
      throw ValidationError("label for unknown sentence " + std::to_string(sid));
  for (SentenceId sid = 0; sid < sources.size(); ++sid) {
    auto it = labels.find(sid);
    if (it == labels.end()) throw ValidationError("missing label for sentence " + std::to_string(sid));
    if (it->second.find('\n') != std::string::npos)
      throw ValidationError("label for sentence " + std::to_string(sid) + " contains a newline");
    if (format == LabelFormat::kTsv &&
        (it->second.find('\t') != std::string::npos || sources[sid].find('\t') != std::string::npos))
      throw ValidationError("sentence " + std::to_string(sid) + " contains a tab");
  }
  if (format == LabelFormat::kParallel && target_out == nullptr)
    throw Error("parallel format needs a target stream");
  for (SentenceId sid = 0; sid < sources.size(); ++sid) {
    const auto &label = labels.at(sid);
    if (format == LabelFormat::kTsv) {
      source_out << sources[sid] << '\t' << label << '\n';
    } else {
      source_out << sources[sid] << '\n';
      *target_out << label << '\n';
    }
  }
}

std::vector<std::filesystem::path> write_pseudo_labels(
    const SourceCorpus &sources, const std::map<SentenceId, std::string> &labels,
    LabelFormat format, const std::filesystem::path &prefix) {
  // Render fully before touching the filesystem so a validation error
  // leaves no partial output behind.
  std::ostringstream src, tgt;
  write_pseudo_labels(sources, labels, format, src, &tgt);
  std::vector<std::pair<std::filesystem::path, std::string>> outputs;
  if (format == LabelFormat::kTsv) {
    outputs.emplace_back(prefix.string() + ".tsv", src.str());
  } else {
    outputs.emplace_back(prefix.string() + ".src", src.str());
    outputs.emplace_back(prefix.string() + ".tgt", tgt.str());
  }
  std::vector<std::filesystem::path> paths;
  for (const auto &[path, content] : outputs) {
    detail::write_file_atomic(path, content);
    paths.push_back(path);
  }
  return paths;
}

}  // namespace nbkd
