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
// Self-training orchestration. One iteration runs these stages in order,
// all under `workdir/iterN/`:
//
//   generate_nbest  hook per data set (tune, dev, transfer) -> SET.nbest
//   score           hook per external feature and set -> SET.NAME.scores
//   assemble        SET.matrix.tsv
//   tune            weights.tsv (MIRA on the tune set)
//   select          mask.txt (top-k features by |weight|)
//   rerank          transfer.labels.{src,tgt} or transfer.labels.tsv
//   evaluate        dev.selections.tsv, dev_eval.tsv
//
// A finished stage leaves an empty `.STAGE.done` marker, and a rerun with
// resume picks up at the first stage without one. Completed iterations are
// appended to `workdir/ledger.jsonl`.
//
// Hook templates are run by /bin/sh with the iteration directory as the
// working directory. Placeholders, replaced textually:
//   {ITER} iteration number     {SET}  tune | dev | transfer
//   {IN}   stage input file     {OUT}  file the hook must write
//   {SRC}  source sentences of the set
//   {PREV} previous iteration's transfer labels (empty in iteration 1)

#ifndef NBKD_PIPELINE_HPP_
#define NBKD_PIPELINE_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nbkd/corpus.hpp"
#include "nbkd/features.hpp"
#include "nbkd/mira.hpp"

namespace nbkd {

struct DataSetPaths {
  std::filesystem::path source;
  std::vector<std::filesystem::path> refs;
};

struct PipelineConfig {
  std::filesystem::path workdir;
  int iterations_max = 3;
  double min_delta = 0.1;
  std::map<std::string, std::string> hooks;
  DataSetPaths tune;
  DataSetPaths dev;
  std::filesystem::path transfer_source;
  std::vector<std::string> passthrough;
  std::vector<NativeFeature> native;
  std::vector<std::string> external;
  MiraConfig mira;
  std::size_t top_k_models = 5;
  unsigned parallelism = 1;
  LabelFormat label_format = LabelFormat::kParallel;

  FeatureSpec feature_spec() const { return {passthrough, native}; }
  // Throws Error describing the first problem found.
  void validate() const;
};

// Relative paths are resolved against `base_dir`.
PipelineConfig parse_config_text(std::string_view text, const std::filesystem::path &base_dir);
PipelineConfig parse_config_json(std::string_view text, const std::filesystem::path &base_dir);
// JSON when the first non-blank character is '{', key/value text otherwise.
PipelineConfig load_config(const std::filesystem::path &path);

struct HookStatus {
  std::string stage;
  int exit_code = 0;
  bool operator==(const HookStatus &) const = default;
};

struct IterationState {
  int iter = 0;
  double dev_bleu = 0.0;
  std::filesystem::path weights_path;
  std::filesystem::path labels_path;
  std::string started;
  std::string finished;
  std::vector<HookStatus> hooks;
};

class HookError : public Error {
 public:
  HookError(std::string stage, int exit_code, const std::string &diagnostics);
  const std::string &stage() const { return stage_; }
  int exit_code() const { return exit_code_; }

 private:
  std::string stage_;
  int exit_code_;
};

inline constexpr const char *kLedgerFile = "ledger.jsonl";

std::vector<IterationState> read_ledger(const std::filesystem::path &workdir);
// Rewrites the whole ledger with `state` appended; refuses non-increasing
// iteration numbers.
void append_ledger(const std::filesystem::path &workdir, const IterationState &state);

std::string ledger_line(const IterationState &state);
IterationState parse_ledger_line(std::string_view line);

IterationState run_iteration(const PipelineConfig &config, int iter,
                             const std::optional<IterationState> &prev);

enum class StopReason { kConverged, kMaxIterations };

std::string stop_reason_name(StopReason r);

// Stop check after the latest entry of `dev_bleus`.
std::optional<StopReason> stop_decision(const std::vector<double> &dev_bleus, int iterations_max,
                                        double min_delta);

// Index of the highest dev BLEU, earliest on ties.
std::size_t best_iteration(const std::vector<double> &dev_bleus);

struct SelftrainResult {
  IterationState final_state;
  StopReason stop_reason;
  std::vector<IterationState> history;
};

// Without `resume`, an existing ledger in the workdir is an error.
SelftrainResult run_selftrain(const PipelineConfig &config, bool resume);

void print_status(std::ostream &out, const std::vector<IterationState> &ledger);

}  // namespace nbkd

#endif  // NBKD_PIPELINE_HPP_
