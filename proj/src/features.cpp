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

#include "nbkd/features.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <thread>
#include <unordered_set>

#include "nbkd/metrics.hpp"
#include "nbkd/util.hpp"

namespace nbkd {

std::string native_feature_name(NativeFeature f) {
  switch (f) {
    case NativeFeature::kMbrBleu: return "mbr_bleu";
    case NativeFeature::kMbrChrf: return "mbr_chrf";
    case NativeFeature::kLen: return "len";
    case NativeFeature::kLenRatio: return "len_ratio";
  }
  return {};
}

NativeFeature parse_native_feature(std::string_view name) {
  for (auto f : {NativeFeature::kMbrBleu, NativeFeature::kMbrChrf, NativeFeature::kLen,
                 NativeFeature::kLenRatio})
    if (native_feature_name(f) == name) return f;
  throw Error("unknown native feature '" + std::string(name) + "'");
}

Eigen::VectorXd mbr_utility(std::span<const std::string> list, Utility utility) {
  if (list.empty()) throw Error("MBR utility of an empty list");
  const auto n = static_cast<Eigen::Index>(list.size());
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);

  if (utility == Utility::kSentenceBleu) {
    std::vector<Tokens> tokens;
    std::vector<BleuReference> refs;
    for (const auto &t : list) {
      tokens.push_back(tokenize_13a(t));
      refs.emplace_back(std::span<const Tokens>(&tokens.back(), 1));
    }
    if (n == 1) {
      u(0) = corpus_bleu(refs[0].stats(tokens[0])).value;
      return u;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      double sum = 0.0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (j != i) sum += corpus_bleu(refs[j].stats(tokens[i])).value;
      u(i) = sum / static_cast<double>(n - 1);
    }
    return u;
  }

  std::vector<CharNGramProfile> profiles;
  for (const auto &t : list) profiles.emplace_back(t);
  if (n == 1) {
    u(0) = chrf_from_stats(CharNGramProfile::compare(profiles[0], profiles[0])).value;
    return u;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) sum += chrf_from_stats(CharNGramProfile::compare(profiles[i], profiles[j])).value;
    u(i) = sum / static_cast<double>(n - 1);
  }
  return u;
}

Eigen::MatrixX2d length_features(std::span<const std::string> list) {
  if (list.empty()) throw Error("length features of an empty list");
  Eigen::MatrixX2d out(static_cast<Eigen::Index>(list.size()), 2);
  for (std::size_t i = 0; i < list.size(); ++i)
    out(static_cast<Eigen::Index>(i), 0) = static_cast<double>(tokenize_13a(list[i]).size());
  double mean = out.col(0).mean();
  if (mean > 0.0)
    out.col(1) = out.col(0) / mean;
  else
    out.col(1).setOnes();
  return out;
}

Eigen::MatrixXd passthrough_features(const std::vector<NBestEntry> &list,
                                     std::span<const std::string> names) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(list.size()),
                      static_cast<Eigen::Index>(names.size()));
  for (std::size_t r = 0; r < list.size(); ++r) {
    for (std::size_t c = 0; c < names.size(); ++c) {
      std::optional<double> v =
          names[c] == kTotalFeature ? std::optional<double>(list[r].total)
                                    : list[r].teacher_score(names[c]);
      if (!v)
        throw ValidationError("score '" + names[c] + "' missing at (" +
                              std::to_string(list[r].sentence_id) + "," +
                              std::to_string(list[r].rank) + ")");
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = *v;
    }
  }
  return out;
}

std::vector<Eigen::MatrixXd> passthrough_features(const NBestCorpus &corpus,
                                                  std::span<const std::string> names) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(corpus.size());
  for (const auto &list : corpus.lists()) out.push_back(passthrough_features(list, names));
  return out;
}

namespace {

Eigen::MatrixXd native_block(const std::vector<std::string> &texts,
                             const std::vector<NativeFeature> &native) {
  Eigen::MatrixXd block(static_cast<Eigen::Index>(texts.size()),
                        static_cast<Eigen::Index>(native.size()));
  std::optional<Eigen::MatrixX2d> lengths;
  for (std::size_t c = 0; c < native.size(); ++c) {
    auto col = static_cast<Eigen::Index>(c);
    switch (native[c]) {
      case NativeFeature::kMbrBleu:
        block.col(col) = mbr_utility(texts, Utility::kSentenceBleu);
        break;
      case NativeFeature::kMbrChrf:
        block.col(col) = mbr_utility(texts, Utility::kSentenceChrf);
        break;
      case NativeFeature::kLen:
      case NativeFeature::kLenRatio:
        if (!lengths) lengths = length_features(texts);
        block.col(col) = lengths->col(native[c] == NativeFeature::kLen ? 0 : 1);
        break;
    }
  }
  return block;
}

}  // namespace

FeatureMatrix assemble_matrix(const NBestCorpus &corpus, const FeatureSpec &spec,
                              std::span<const ExternalScoreTable> tables, unsigned threads) {
  FeatureMatrix m;
  for (const auto &n : spec.passthrough) m.feature_names.push_back(n);
  for (auto f : spec.native) m.feature_names.push_back(native_feature_name(f));
  for (const auto &t : tables) m.feature_names.push_back(t.feature_name);
  if (m.feature_names.empty()) throw ValidationError("zero features");
  std::unordered_set<std::string> seen;
  for (const auto &n : m.feature_names)
    if (!seen.insert(n).second) throw ValidationError("duplicate feature name '" + n + "'");
  for (const auto &t : tables) t.validate(corpus);

  const auto np = static_cast<Eigen::Index>(spec.passthrough.size());
  const auto nn = static_cast<Eigen::Index>(spec.native.size());
  m.values.resize(corpus.size());

  auto fill = [&](std::size_t sid) {
    const auto &list = corpus.list(sid);
    auto &block = m.values[sid];
    block.resize(static_cast<Eigen::Index>(list.size()), m.cols());
    if (np > 0) block.leftCols(np) = passthrough_features(list, spec.passthrough);
    if (nn > 0) block.middleCols(np, nn) = native_block(corpus.texts(sid), spec.native);
    for (std::size_t t = 0; t < tables.size(); ++t)
      for (std::size_t r = 0; r < list.size(); ++r)
        block(static_cast<Eigen::Index>(r), np + nn + static_cast<Eigen::Index>(t)) =
            tables[t].at(sid, r);
  };

  threads = std::max(1u, threads);
  if (threads == 1 || corpus.size() < 2) {
    for (std::size_t s = 0; s < corpus.size(); ++s) fill(s);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t s; (s = next.fetch_add(1)) < corpus.size();) fill(s);
        } catch (...) {
          errors[w] = std::current_exception();
          next = corpus.size();
        }
      });
    }
    for (auto &t : pool) t.join();
    for (auto &e : errors)
      if (e) std::rethrow_exception(e);
  }

  for (std::size_t s = 0; s < m.values.size(); ++s)
    if (!m.values[s].allFinite())
      throw ValidationError("non-finite score in sentence " + std::to_string(s));
  return m;
}

FeatureMatrix hconcat(const FeatureMatrix &left, const FeatureMatrix &right) {
  if (left.size() != right.size())
    throw ValidationError("cannot concatenate matrices over different sentence counts");
  FeatureMatrix out;
  out.feature_names = left.feature_names;
  out.feature_names.insert(out.feature_names.end(), right.feature_names.begin(),
                           right.feature_names.end());
  for (std::size_t s = 0; s < left.size(); ++s) {
    if (left.values[s].rows() != right.values[s].rows())
      throw ValidationError("row count mismatch in sentence " + std::to_string(s));
    Eigen::MatrixXd block(left.values[s].rows(), left.cols() + right.cols());
    block << left.values[s], right.values[s];
    out.values.push_back(std::move(block));
  }
  out.validate();
  return out;
}

void write_matrix(std::ostream &out, const FeatureMatrix &matrix) {
  out << "#features";
  for (const auto &n : matrix.feature_names) out << '\t' << n;
  out << '\n';
  for (std::size_t s = 0; s < matrix.size(); ++s) {
    const auto &block = matrix.values[s];
    for (Eigen::Index r = 0; r < block.rows(); ++r) {
      out << s << '\t' << r;
      for (Eigen::Index c = 0; c < block.cols(); ++c) out << '\t' << format_double(block(r, c));
      out << '\n';
    }
  }
}

FeatureMatrix read_matrix(std::istream &in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(0, "empty matrix file");
  auto header = detail::split(line, '\t');
  if (header.empty() || header[0] != "#features")
    throw ParseError(1, "missing '#features' header");
  FeatureMatrix m;
  m.feature_names.assign(header.begin() + 1, header.end());
  if (m.feature_names.empty()) throw ParseError(1, "zero features");

  std::vector<std::vector<std::vector<double>>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    auto fields = detail::split(line, '\t');
    if (fields.size() != m.feature_names.size() + 2)
      throw ParseError(lineno, "expected " + std::to_string(m.feature_names.size() + 2) + " fields");
    auto sid = detail::parse_index(fields[0]);
    auto rank = detail::parse_index(fields[1]);
    if (!sid || !rank) throw ParseError(lineno, "bad sentence id or rank");
    auto s = *sid, r = *rank;
    if (s == rows.size()) rows.emplace_back();
    if (s + 1 != rows.size()) throw ParseError(lineno, "non-dense sentence ids");
    if (r != rows.back().size()) throw ParseError(lineno, "non-contiguous rank");
    std::vector<double> values;
    for (std::size_t c = 2; c < fields.size(); ++c) {
      auto v = parse_double(fields[c]);
      if (!v) throw ParseError(lineno, "bad value '" + fields[c] + "'");
      values.push_back(*v);
    }
    rows.back().push_back(std::move(values));
  }
  for (const auto &sentence : rows) {
    Eigen::MatrixXd block(static_cast<Eigen::Index>(sentence.size()), m.cols());
    for (std::size_t r = 0; r < sentence.size(); ++r)
      for (std::size_t c = 0; c < sentence[r].size(); ++c)
        block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = sentence[r][c];
    m.values.push_back(std::move(block));
  }
  m.validate();
  return m;
}

FeatureMatrix read_matrix(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_matrix(in);
}

}  // namespace nbkd
