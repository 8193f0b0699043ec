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

#include "nbkd/mira.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "nbkd/features.hpp"
#include "nbkd/util.hpp"

namespace nbkd {

InitMode parse_init_mode(std::string_view name) {
  if (name == "default") return InitMode::kDefault;
  if (name == "zeros") return InitMode::kZeros;
  if (name == "uniform") return InitMode::kUniform;
  if (name == "given") return InitMode::kGiven;
  throw Error("unknown init mode '" + std::string(name) + "'");
}

void MiraConfig::validate() const {
  if (!(c > 0.0) || !std::isfinite(c)) throw Error("MIRA c must be a positive finite number");
  if (epochs < 1) throw Error("MIRA epochs must be at least 1");
  if (init == InitMode::kGiven && !given) throw Error("init 'given' needs initial weights");
}

HypothesisStats hypothesis_stats(const NBestCorpus &corpus, const ReferenceSet &refs) {
  if (refs.size() != corpus.size())
    throw ValidationError("n-best corpus has " + std::to_string(corpus.size()) +
                          " sentences, references cover " + std::to_string(refs.size()));
  HypothesisStats out(corpus.size());
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    auto ref = BleuReference::from_text(refs.refs(s));
    for (const auto &e : corpus.list(s)) out[s].push_back(ref.stats(tokenize_13a(e.text)));
  }
  return out;
}

WeightVector initial_weights(const std::vector<std::string> &names, const MiraConfig &config) {
  const auto m = static_cast<Eigen::Index>(names.size());
  WeightVector w{names, Eigen::VectorXd::Zero(m)};
  switch (config.init) {
    case InitMode::kDefault:
      for (Eigen::Index i = 0; i < m; ++i)
        if (names[static_cast<std::size_t>(i)] == kTotalFeature) w.weights(i) = 1.0;
      break;
    case InitMode::kZeros:
      break;
    case InitMode::kUniform:
      if (m > 0) w.weights.setConstant(1.0 / static_cast<double>(m));
      break;
    case InitMode::kGiven:
      if (!config.given) throw Error("init 'given' needs initial weights");
      w = config.given->aligned_to(names);
      break;
  }
  if (!w.weights.allFinite()) throw ValidationError("non-finite initial weight");
  return w;
}

std::vector<Rank> select_by_weights(const FeatureMatrix &matrix, const WeightVector &weights) {
  auto w = weights.aligned_to(matrix.feature_names);
  std::vector<Rank> out;
  out.reserve(matrix.size());
  for (const auto &block : matrix.values)
    out.push_back(static_cast<Rank>(best_row(block, w.weights)));
  return out;
}

BleuScore evaluate_weights(const FeatureMatrix &matrix, const HypothesisStats &stats,
                           const WeightVector &weights) {
  if (stats.size() != matrix.size())
    throw ValidationError("statistics cover " + std::to_string(stats.size()) +
                          " sentences, matrix has " + std::to_string(matrix.size()));
  auto picks = select_by_weights(matrix, weights);
  NGramStats total;
  for (std::size_t s = 0; s < picks.size(); ++s) total += stats[s].at(picks[s]);
  return corpus_bleu(total);
}

BleuScore evaluate_weights(const FeatureMatrix &matrix, const NBestCorpus &corpus,
                           const ReferenceSet &refs, const WeightVector &weights) {
  matrix.check_aligned(corpus);
  return evaluate_weights(matrix, hypothesis_stats(corpus, refs), weights);
}

namespace {

// Fisher-Yates on raw engine output, so the order only depends on the seed.
void seeded_shuffle(std::vector<std::size_t> &v, std::mt19937_64 &rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

TuneRun tune_mira(const FeatureMatrix &matrix, const NBestCorpus &corpus, const ReferenceSet &refs,
                  const MiraConfig &config, const UpdateObserver &observer) {
  config.validate();
  if (matrix.cols() == 0) throw ValidationError("zero features");
  matrix.validate();
  matrix.check_aligned(corpus);
  const auto stats = hypothesis_stats(corpus, refs);

  std::vector<Eigen::VectorXd> gains(corpus.size());
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    gains[s].resize(static_cast<Eigen::Index>(stats[s].size()));
    for (std::size_t r = 0; r < stats[s].size(); ++r)
      gains[s](static_cast<Eigen::Index>(r)) = corpus_bleu(stats[s][r]).value;
  }

  TuneRun run;
  WeightVector current = initial_weights(matrix.feature_names, config);
  run.history.push_back({current, evaluate_weights(matrix, stats, current).value});

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    seeded_shuffle(order, rng);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(matrix.cols());
    for (auto s : order) {
      const auto &f = matrix.values[s];
      const auto &g = gains[s];
      Eigen::VectorXd scores = f * current.weights;
      auto hope = first_argmax(scores + g);
      auto fear = first_argmax(scores - g);
      if (hope != fear) {
        Eigen::VectorXd df = (f.row(hope) - f.row(fear)).transpose();
        double dg = g(hope) - g(fear);
        double loss = dg - current.weights.dot(df);
        double norm2 = df.squaredNorm();
        if (loss > 0.0 && norm2 > 0.0) {
          double step = std::min(config.c, loss / norm2);
          current.weights += step * df;
          ++run.updates;
          if (observer)
            observer({static_cast<std::size_t>(epoch), s, static_cast<Rank>(hope),
                      static_cast<Rank>(fear), loss, dg - current.weights.dot(df), step,
                      step == config.c});
        }
      }
      sum += current.weights;
    }
    WeightVector averaged{matrix.feature_names, sum / static_cast<double>(order.size())};
    double bleu = evaluate_weights(matrix, stats, averaged).value;
    run.history.push_back({std::move(averaged), bleu});
  }

  for (std::size_t e = 1; e < run.history.size(); ++e)
    if (run.history[e].tune_bleu > run.history[run.best_epoch].tune_bleu) run.best_epoch = e;
  run.best_weights = run.history[run.best_epoch].weights;
  return run;
}

void write_weights(std::ostream &out, const WeightVector &weights, const TuneRun *run) {
  for (Eigen::Index i = 0; i < weights.size(); ++i)
    out << weights.feature_names[static_cast<std::size_t>(i)] << '\t'
        << format_double(weights.weights(i)) << '\n';
  if (run)
    out << "#best_epoch\t" << run->best_epoch << "\t#tune_bleu\t"
        << format_double(run->history[run->best_epoch].tune_bleu) << '\n';
}

WeightVector read_weights(std::istream &in) {
  WeightVector w;
  std::vector<double> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    auto fields = detail::split(line, '\t');
    if (fields.size() != 2) throw ParseError(lineno, "expected NAME<TAB>WEIGHT");
    auto v = parse_double(fields[1]);
    if (!v || !std::isfinite(*v)) throw ParseError(lineno, "bad weight '" + fields[1] + "'");
    if (std::find(w.feature_names.begin(), w.feature_names.end(), fields[0]) !=
        w.feature_names.end())
      throw ParseError(lineno, "feature '" + fields[0] + "' repeated");
    w.feature_names.push_back(fields[0]);
    values.push_back(*v);
  }
  if (values.empty()) throw ParseError(0, "no weights");
  w.weights = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  return w;
}

WeightVector read_weights(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_weights(in);
}

}  // namespace nbkd
