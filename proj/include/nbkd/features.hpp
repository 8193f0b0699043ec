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
// Feature matrix assembly. Columns come in three groups, in this order:
// scores copied from the n-best file, features computed here from the
// list itself (MBR consensus, length), and external score tables.

#ifndef NBKD_FEATURES_HPP_
#define NBKD_FEATURES_HPP_

#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "nbkd/corpus.hpp"
#include "nbkd/linear.hpp"

namespace nbkd {

enum class Utility { kSentenceBleu, kSentenceChrf };

enum class NativeFeature { kMbrBleu, kMbrChrf, kLen, kLenRatio };

std::string native_feature_name(NativeFeature f);
NativeFeature parse_native_feature(std::string_view name);

// Reserved passthrough name selecting NBestEntry::total.
inline constexpr std::string_view kTotalFeature = "total";

struct FeatureSpec {
  std::vector<std::string> passthrough;
  std::vector<NativeFeature> native;
};

// U(t_i) = mean over j != i of utility(hyp = t_i, ref = t_j). A single
// hypothesis is scored against itself.
Eigen::VectorXd mbr_utility(std::span<const std::string> list, Utility utility);

// Column 0: 13a token count. Column 1: count / mean count over the list
// (1.0 when every hypothesis is empty).
Eigen::MatrixX2d length_features(std::span<const std::string> list);

// One column per name, in the order given.
Eigen::MatrixXd passthrough_features(const std::vector<NBestEntry> &list,
                                     std::span<const std::string> names);
std::vector<Eigen::MatrixXd> passthrough_features(const NBestCorpus &corpus,
                                                  std::span<const std::string> names);

// `threads` > 1 spreads the per-sentence work over worker threads; the
// result does not depend on it.
FeatureMatrix assemble_matrix(const NBestCorpus &corpus, const FeatureSpec &spec,
                              std::span<const ExternalScoreTable> tables, unsigned threads = 1);

// Column-wise concatenation; names must stay unique.
FeatureMatrix hconcat(const FeatureMatrix &left, const FeatureMatrix &right);

// `#features\tNAME...` header, then `SID\tRANK\tV1...VM` per hypothesis.
void write_matrix(std::ostream &out, const FeatureMatrix &matrix);
FeatureMatrix read_matrix(std::istream &in);
FeatureMatrix read_matrix(const std::filesystem::path &path);

}  // namespace nbkd

#endif  // NBKD_FEATURES_HPP_
