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
// Dense linear-model primitives shared by reranking and tuning: named
// weight vectors, per-sentence feature blocks and tie-stable argmax.

#ifndef NBKD_LINEAR_HPP_
#define NBKD_LINEAR_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "nbkd/corpus.hpp"

namespace nbkd {

template <typename Scalar>
using Block = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Feature values M(s, t): one n_s x M block per sentence, columns named.
template <typename Scalar>
struct BasicFeatureMatrix {
  std::vector<std::string> feature_names;
  std::vector<Block<Scalar>> values;

  Eigen::Index cols() const { return static_cast<Eigen::Index>(feature_names.size()); }
  std::size_t size() const { return values.size(); }

  std::optional<Eigen::Index> column(std::string_view name) const {
    for (std::size_t i = 0; i < feature_names.size(); ++i)
      if (feature_names[i] == name) return static_cast<Eigen::Index>(i);
    return std::nullopt;
  }

  // Unique names, consistent widths, finite values.
  void validate() const {
    std::unordered_set<std::string> seen;
    for (const auto &n : feature_names)
      if (!seen.insert(n).second) throw ValidationError("duplicate feature name '" + n + "'");
    for (std::size_t s = 0; s < values.size(); ++s) {
      if (values[s].cols() != cols())
        throw ValidationError("sentence " + std::to_string(s) + " has " +
                              std::to_string(values[s].cols()) + " feature columns, expected " +
                              std::to_string(cols()));
      if (!values[s].allFinite())
        throw ValidationError("non-finite feature value in sentence " + std::to_string(s));
    }
  }

  // Same sentence count and list lengths as `corpus`.
  void check_aligned(const NBestCorpus &corpus) const {
    if (values.size() != corpus.size())
      throw ValidationError("matrix has " + std::to_string(values.size()) +
                            " sentences, n-best corpus has " + std::to_string(corpus.size()));
    for (std::size_t s = 0; s < values.size(); ++s)
      if (static_cast<std::size_t>(values[s].rows()) != corpus.list(s).size())
        throw ValidationError("sentence " + std::to_string(s) + ": matrix has " +
                              std::to_string(values[s].rows()) + " rows, n-best list has " +
                              std::to_string(corpus.list(s).size()));
  }

  bool operator==(const BasicFeatureMatrix &o) const {
    if (feature_names != o.feature_names || values.size() != o.values.size()) return false;
    for (std::size_t s = 0; s < values.size(); ++s)
      if (values[s].rows() != o.values[s].rows() || values[s].cols() != o.values[s].cols() ||
          values[s] != o.values[s])
        return false;
    return true;
  }
};

template <typename Scalar>
struct BasicWeightVector {
  std::vector<std::string> feature_names;
  Vector<Scalar> weights;

  Eigen::Index size() const { return weights.size(); }

  std::optional<Scalar> weight(std::string_view name) const {
    for (std::size_t i = 0; i < feature_names.size(); ++i)
      if (feature_names[i] == name) return weights(static_cast<Eigen::Index>(i));
    return std::nullopt;
  }

  // Reorders to `names`; the two name sets must coincide.
  BasicWeightVector aligned_to(const std::vector<std::string> &names) const {
    if (names.size() != feature_names.size())
      throw ValidationError("weight vector has " + std::to_string(feature_names.size()) +
                            " features, matrix has " + std::to_string(names.size()));
    BasicWeightVector out{names, Vector<Scalar>(static_cast<Eigen::Index>(names.size()))};
    for (std::size_t i = 0; i < names.size(); ++i) {
      auto w = weight(names[i]);
      if (!w) throw ValidationError("no weight for feature '" + names[i] + "'");
      out.weights(static_cast<Eigen::Index>(i)) = *w;
    }
    return out;
  }

  bool operator==(const BasicWeightVector &o) const {
    return feature_names == o.feature_names && weights.size() == o.weights.size() &&
           weights == o.weights;
  }
};

using FeatureMatrix = BasicFeatureMatrix<double>;
using WeightVector = BasicWeightVector<double>;

// Index of the largest coefficient; the lowest index wins ties.
template <typename Derived>
Eigen::Index first_argmax(const Eigen::DenseBase<Derived> &v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = i;
  return best;
}

template <typename Derived>
Eigen::Index first_argmin(const Eigen::DenseBase<Derived> &v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v(i) < v(best)) best = i;
  return best;
}

// Eigen::Index of the best-scoring row of `features` under `weights`.
template <typename MatDerived, typename VecDerived>
Eigen::Index best_row(const Eigen::MatrixBase<MatDerived> &features,
                      const Eigen::MatrixBase<VecDerived> &weights) {
  using Scalar = typename MatDerived::Scalar;
  Vector<Scalar> scores = features * weights;
  if (!scores.allFinite()) throw ValidationError("non-finite model score");
  return first_argmax(scores);
}

}  // namespace nbkd

#endif  // NBKD_LINEAR_HPP_
