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

#include "nbkd/pipeline.hpp"

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "nbkd/distill.hpp"
#include "nbkd/rerank.hpp"
#include "nbkd/util.hpp"

namespace fs = std::filesystem;

namespace nbkd {

HookError::HookError(std::string stage, int exit_code, const std::string &diagnostics)
    : Error("hook '" + stage + "' exited with status " + std::to_string(exit_code) +
            (diagnostics.empty() ? "" : "\n" + diagnostics)),
      stage_(std::move(stage)),
      exit_code_(exit_code) {}

namespace {

std::string now_utc() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string substitute(std::string tmpl, const std::map<std::string, std::string> &vars) {
  for (const auto &[key, value] : vars) {
    std::string token = "{" + key + "}";
    std::size_t pos = 0;
    while ((pos = tmpl.find(token, pos)) != std::string::npos) {
      tmpl.replace(pos, token.size(), value);
      pos += value.size();
    }
  }
  return tmpl;
}

std::string tail_lines(const fs::path &path, std::size_t n) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  std::string out;
  for (std::size_t i = lines.size() > n ? lines.size() - n : 0; i < lines.size(); ++i)
    out += lines[i] + "\n";
  return out;
}

struct HookCall {
  std::string stage;
  std::string command;
  fs::path output;
};

pid_t spawn(const HookCall &call, const fs::path &cwd, const fs::path &log) {
  pid_t pid = fork();
  if (pid < 0) throw Error("fork failed for hook '" + call.stage + "'");
  if (pid == 0) {
    if (chdir(cwd.c_str()) != 0) _exit(126);
    int fd = open(log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd >= 0) {
      dup2(fd, STDOUT_FILENO);
      dup2(fd, STDERR_FILENO);
      close(fd);
    }
    execl("/bin/sh", "sh", "-c", call.command.c_str(), static_cast<char *>(nullptr));
    _exit(127);
  }
  return pid;
}

int exit_status(int status) {
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return -1;
}

class IterationDir {
 public:
  IterationDir(const fs::path &workdir, int iter)
      : dir_(fs::absolute(workdir / ("iter" + std::to_string(iter)))) {
    fs::create_directories(dir_ / "logs");
  }

  const fs::path &path() const { return dir_; }
  fs::path operator/(const std::string &name) const { return dir_ / name; }

  bool done(const std::string &stage) const { return fs::exists(marker(stage)); }
  void mark(const std::string &stage) const { std::ofstream(marker(stage)).flush(); }

  void record_hook(const std::string &stage, int code) const {
    std::ofstream out(dir_ / "hooks.tsv", std::ios::app);
    out << stage << '\t' << code << '\n';
  }

  std::vector<HookStatus> hook_statuses() const {
    std::vector<HookStatus> out;
    std::ifstream in(dir_ / "hooks.tsv");
    std::string line;
    while (std::getline(in, line)) {
      auto tab = line.rfind('\t');
      if (tab == std::string::npos) continue;
      out.push_back({line.substr(0, tab), std::stoi(line.substr(tab + 1))});
    }
    return out;
  }

  // Runs up to `parallelism` hooks at a time; throws on the first failure
  // after the whole batch has finished.
  void run_hooks(const std::vector<HookCall> &calls, unsigned parallelism) const {
    std::map<pid_t, std::size_t> running;
    std::vector<int> codes(calls.size(), 0);
    std::size_t next = 0;
    auto log_of = [&](std::size_t i) {
      std::string name = calls[i].stage;
      for (auto &ch : name)
        if (ch == ':' || ch == '/') ch = '.';
      return dir_ / "logs" / (name + ".log");
    };
    while (next < calls.size() || !running.empty()) {
      while (next < calls.size() && running.size() < std::max(1u, parallelism)) {
        running.emplace(spawn(calls[next], dir_, log_of(next)), next);
        ++next;
      }
      int status = 0;
      pid_t pid = waitpid(-1, &status, 0);
      if (pid < 0) throw Error("waitpid failed");
      auto it = running.find(pid);
      if (it == running.end()) continue;
      codes[it->second] = exit_status(status);
      record_hook(calls[it->second].stage, codes[it->second]);
      running.erase(it);
    }
    for (std::size_t i = 0; i < calls.size(); ++i) {
      if (codes[i] != 0) throw HookError(calls[i].stage, codes[i], tail_lines(log_of(i), 20));
      if (!fs::exists(calls[i].output))
        throw HookError(calls[i].stage, 0, "hook did not write " + calls[i].output.string());
    }
  }

 private:
  fs::path marker(const std::string &stage) const { return dir_ / ("." + stage + ".done"); }
  fs::path dir_;
};

struct DataSet {
  std::string name;
  fs::path source;
};

void write_mask(const fs::path &path, const SelectionMask &mask) {
  std::ostringstream out;
  out << "#k\t" << mask.k << '\n';
  for (const auto &n : mask.active) out << n << '\n';
  detail::write_file_atomic(path, out.str());
}

SelectionMask read_mask(const fs::path &path) {
  SelectionMask mask;
  std::istringstream in(detail::read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("#k\t", 0) == 0) {
      auto k = detail::parse_index(line.substr(3));
      if (!k) throw ParseError(0, path.string() + ": bad k");
      mask.k = *k;
    } else if (!line.empty()) {
      mask.active.push_back(line);
    }
  }
  return mask;
}

std::string render(const auto &writer) {
  std::ostringstream out;
  writer(out);
  return out.str();
}

fs::path labels_file(const fs::path &prefix, LabelFormat format) {
  return prefix.string() + (format == LabelFormat::kTsv ? ".tsv" : ".tgt");
}

double read_dev_bleu(const fs::path &path) {
  std::istringstream in(detail::read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("#bleu_exact\t", 0) == 0) {
      auto v = parse_double(line.substr(12));
      if (v) return *v;
    }
  }
  throw ParseError(0, path.string() + ": no #bleu_exact line");
}

}  // namespace

IterationState run_iteration(const PipelineConfig &config, int iter,
                             const std::optional<IterationState> &prev) {
  config.validate();
  if (iter < 1) throw Error("iterations are numbered from 1");
  if (iter > 1 && !prev) throw Error("iteration " + std::to_string(iter) + " needs the previous state");
  if (prev && !fs::exists(prev->labels_path))
    throw Error("previous labels missing: " + prev->labels_path.string());

  IterationDir dir(config.workdir, iter);
  IterationState state;
  state.iter = iter;
  if (fs::exists(dir / ".started")) {
    state.started = std::string(detail::trim(detail::read_file(dir / ".started")));
  } else {
    state.started = now_utc();
    detail::write_file_atomic(dir / ".started", state.started + "\n");
  }

  const std::vector<DataSet> sets = {{"tune", fs::absolute(config.tune.source)},
                                     {"dev", fs::absolute(config.dev.source)},
                                     {"transfer", fs::absolute(config.transfer_source)}};
  const std::string prev_labels = prev ? prev->labels_path.string() : "";
  auto vars = [&](const DataSet &set, const fs::path &in, const fs::path &out) {
    return std::map<std::string, std::string>{{"ITER", std::to_string(iter)},
                                              {"SET", set.name},
                                              {"IN", in.string()},
                                              {"OUT", out.string()},
                                              {"SRC", set.source.string()},
                                              {"PREV", prev_labels}};
  };
  auto nbest_path = [&](const DataSet &set) { return dir / (set.name + ".nbest"); };
  auto scores_path = [&](const DataSet &set, const std::string &feature) {
    return dir / (set.name + "." + feature + ".scores");
  };
  auto matrix_path = [&](const std::string &set) { return dir / (set + ".matrix.tsv"); };

  if (!dir.done("generate_nbest")) {
    std::vector<HookCall> calls;
    for (const auto &set : sets)
      calls.push_back({"generate_nbest:" + set.name,
                       substitute(config.hooks.at("generate_nbest"),
                                  vars(set, set.source, nbest_path(set))),
                       nbest_path(set)});
    dir.run_hooks(calls, config.parallelism);
    dir.mark("generate_nbest");
  }

  if (!dir.done("score")) {
    std::vector<HookCall> calls;
    for (const auto &feature : config.external)
      for (const auto &set : sets)
        calls.push_back({"score_" + feature + ":" + set.name,
                         substitute(config.hooks.at("score_" + feature),
                                    vars(set, nbest_path(set), scores_path(set, feature))),
                         scores_path(set, feature)});
    dir.run_hooks(calls, config.parallelism);
    dir.mark("score");
  }

  if (!dir.done("assemble")) {
    for (const auto &set : sets) {
      auto nbest = load_nbest(nbest_path(set));
      auto sources = load_lines(set.source);
      if (nbest.size() != sources.size())
        throw ValidationError(set.name + ": n-best covers " + std::to_string(nbest.size()) +
                              " sentences, source has " + std::to_string(sources.size()));
      std::vector<ExternalScoreTable> tables;
      for (const auto &feature : config.external)
        tables.push_back(load_scores(scores_path(set, feature), feature));
      auto matrix = assemble_matrix(nbest, config.feature_spec(), tables, config.parallelism);
      detail::write_file_atomic(matrix_path(set.name),
                                render([&](std::ostream &o) { write_matrix(o, matrix); }));
    }
    dir.mark("assemble");
  }

  state.weights_path = dir / "weights.tsv";
  if (!dir.done("tune")) {
    auto matrix = read_matrix(matrix_path("tune"));
    auto nbest = load_nbest(nbest_path(sets[0]));
    auto refs = load_references(config.tune.refs);
    auto run = tune_mira(matrix, nbest, refs, config.mira);
    detail::write_file_atomic(state.weights_path, render([&](std::ostream &o) {
                                write_weights(o, run.best_weights, &run);
                              }));
    dir.mark("tune");
  }
  auto weights = read_weights(state.weights_path);

  if (!dir.done("select")) {
    write_mask(dir / "mask.txt", select_models(weights, config.top_k_models));
    dir.mark("select");
  }
  auto mask = read_mask(dir / "mask.txt");

  const auto label_prefix = dir / "transfer.labels";
  state.labels_path = labels_file(label_prefix, config.label_format);
  if (!dir.done("rerank")) {
    auto matrix = read_matrix(matrix_path("transfer"));
    auto nbest = load_nbest(nbest_path(sets[2]));
    auto labels = rerank_labels(matrix, nbest, weights, &mask);
    write_pseudo_labels(load_lines(sets[2].source), labels.labels, config.label_format,
                        label_prefix);
    dir.mark("rerank");
  }

  if (!dir.done("evaluate")) {
    auto matrix = read_matrix(matrix_path("dev"));
    auto nbest = load_nbest(nbest_path(sets[1]));
    auto refs = load_references(config.dev.refs);
    auto result = rerank(matrix, nbest, weights, &mask, &refs);
    detail::write_file_atomic(dir / "dev.selections.tsv",
                              render([&](std::ostream &o) { write_selections(o, result); }));
    char buf[64];
    std::snprintf(buf, sizeof(buf), "BLEU\t%.4f\n", result.corpus_score->value);
    detail::write_file_atomic(dir / "dev_eval.tsv",
                              std::string(buf) + "#signature\t" + bleu_signature(refs.max_refs()) +
                                  "\n#bleu_exact\t" + format_double(result.corpus_score->value) +
                                  "\n");
    dir.mark("evaluate");
  }
  state.dev_bleu = read_dev_bleu(dir / "dev_eval.tsv");
  state.hooks = dir.hook_statuses();
  state.finished = now_utc();
  return state;
}

std::string stop_reason_name(StopReason r) {
  return r == StopReason::kConverged ? "converged" : "max_iterations";
}

std::optional<StopReason> stop_decision(const std::vector<double> &dev_bleus, int iterations_max,
                                        double min_delta) {
  const auto n = dev_bleus.size();
  if (n >= 2 && dev_bleus[n - 1] - dev_bleus[n - 2] < min_delta) return StopReason::kConverged;
  if (n >= static_cast<std::size_t>(iterations_max)) return StopReason::kMaxIterations;
  return std::nullopt;
}

std::size_t best_iteration(const std::vector<double> &dev_bleus) {
  if (dev_bleus.empty()) throw Error("no iterations");
  std::size_t best = 0;
  for (std::size_t i = 1; i < dev_bleus.size(); ++i)
    if (dev_bleus[i] > dev_bleus[best]) best = i;
  return best;
}

std::string ledger_line(const IterationState &s) {
  nlohmann::ordered_json j;
  j["iter"] = s.iter;
  j["dev_bleu"] = s.dev_bleu;
  j["weights_path"] = s.weights_path.string();
  j["labels_path"] = s.labels_path.string();
  j["started"] = s.started;
  j["finished"] = s.finished;
  j["hooks"] = nlohmann::ordered_json::array();
  for (const auto &h : s.hooks) j["hooks"].push_back({{"stage", h.stage}, {"exit_code", h.exit_code}});
  return j.dump();
}

IterationState parse_ledger_line(std::string_view line) {
  try {
    auto j = nlohmann::json::parse(line);
    IterationState s;
    s.iter = j.at("iter").get<int>();
    s.dev_bleu = j.at("dev_bleu").get<double>();
    s.weights_path = j.at("weights_path").get<std::string>();
    s.labels_path = j.at("labels_path").get<std::string>();
    s.started = j.at("started").get<std::string>();
    s.finished = j.at("finished").get<std::string>();
    for (const auto &h : j.at("hooks"))
      s.hooks.push_back({h.at("stage").get<std::string>(), h.at("exit_code").get<int>()});
    return s;
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(0, std::string("ledger: ") + e.what());
  }
}

std::vector<IterationState> read_ledger(const fs::path &workdir) {
  std::vector<IterationState> out;
  auto path = workdir / kLedgerFile;
  if (!fs::exists(path)) return out;
  std::istringstream in(detail::read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto s = parse_ledger_line(line);
    if (!out.empty() && s.iter <= out.back().iter)
      throw ValidationError("ledger iterations are not increasing at iter " + std::to_string(s.iter));
    out.push_back(std::move(s));
  }
  return out;
}

void append_ledger(const fs::path &workdir, const IterationState &state) {
  auto existing = read_ledger(workdir);
  if (!existing.empty() && state.iter <= existing.back().iter)
    throw ValidationError("ledger already holds iteration " + std::to_string(existing.back().iter));
  auto path = workdir / kLedgerFile;
  std::string content = fs::exists(path) ? detail::read_file(path) : "";
  content += ledger_line(state) + "\n";
  detail::write_file_atomic(path, content);
}

namespace {

SelftrainResult finalize(const PipelineConfig &config, std::vector<IterationState> history,
                         StopReason reason) {
  std::vector<double> devs;
  for (const auto &s : history) devs.push_back(s.dev_bleu);
  const auto &best = history[best_iteration(devs)];
  auto copy = [&](const fs::path &from, const std::string &ext) {
    detail::write_file_atomic(config.workdir / ("final" + ext), detail::read_file(from));
  };
  if (config.label_format == LabelFormat::kTsv) {
    copy(best.labels_path, ".tsv");
  } else {
    auto src = best.labels_path;
    src.replace_extension(".src");
    copy(src, ".src");
    copy(best.labels_path, ".tgt");
  }
  nlohmann::ordered_json j;
  j["iter"] = best.iter;
  j["dev_bleu"] = best.dev_bleu;
  j["stop_reason"] = stop_reason_name(reason);
  j["iterations_run"] = history.size();
  detail::write_file_atomic(config.workdir / "final.json", j.dump(2) + "\n");
  return {best, reason, std::move(history)};
}

}  // namespace

SelftrainResult run_selftrain(const PipelineConfig &config, bool resume) {
  config.validate();
  fs::create_directories(config.workdir);
  auto history = read_ledger(config.workdir);
  if (!resume && (!history.empty() || fs::exists(config.workdir / "iter1")))
    throw Error("workdir " + config.workdir.string() + " already holds a run; use --resume");

  std::vector<double> devs;
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (history[i].iter != static_cast<int>(i) + 1)
      throw ValidationError("ledger is missing iteration " + std::to_string(i + 1));
    devs.push_back(history[i].dev_bleu);
    if (auto reason = stop_decision(devs, config.iterations_max, config.min_delta)) {
      history.resize(i + 1);
      return finalize(config, std::move(history), *reason);
    }
  }

  while (true) {
    int iter = static_cast<int>(history.size()) + 1;
    std::optional<IterationState> prev;
    if (!history.empty()) prev = history.back();
    auto state = run_iteration(config, iter, prev);
    append_ledger(config.workdir, state);
    history.push_back(state);
    devs.push_back(state.dev_bleu);
    if (auto reason = stop_decision(devs, config.iterations_max, config.min_delta))
      return finalize(config, std::move(history), *reason);
  }
}

void print_status(std::ostream &out, const std::vector<IterationState> &ledger) {
  out << "iter\tdev_bleu\tstarted\tfinished\thooks_failed\tlabels\n";
  char buf[32];
  for (const auto &s : ledger) {
    std::size_t failed = 0;
    for (const auto &h : s.hooks)
      if (h.exit_code != 0) ++failed;
    std::snprintf(buf, sizeof(buf), "%.4f", s.dev_bleu);
    out << s.iter << '\t' << buf << '\t' << s.started << '\t' << s.finished << '\t' << failed
        << '\t' << s.labels_path.string() << '\n';
  }
}

}  // namespace nbkd
