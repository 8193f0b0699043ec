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
// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
// the exit status is non-zero when any criterion fails.

#include <json.hpp>

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "nbkd/distill.hpp"
#include "nbkd/features.hpp"
#include "nbkd/metrics.hpp"
#include "nbkd/mira.hpp"
#include "nbkd/pipeline.hpp"
#include "nbkd/rerank.hpp"
#include "nbkd/util.hpp"
#include "oracle/brute_force.hpp"
#include "support/pipeline_fixture.hpp"
#include "support/synth.hpp"

using namespace nbkd;
namespace fs = std::filesystem;

namespace {

// Collects failure notes for one criterion.
struct Check {
  std::vector<std::string> failures;

  void expect(bool ok, const std::string &what) {
    if (!ok && failures.size() < 10) failures.push_back(what);
    if (!ok && failures.size() == 10) failures.push_back("...");
  }
  bool ok() const { return failures.empty(); }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Runs a shell command; returns the raw wait status.
int shell(const std::string &cmd) { return std::system(cmd.c_str()); }

int exit_code(int status) { return WIFEXITED(status) ? WEXITSTATUS(status) : -1; }

const std::string kCli = NBKD_CLI_PATH;

std::string q(const fs::path &p) { return "'" + p.string() + "'"; }

std::string read(const fs::path &p) { return fs::exists(p) ? detail::read_file(p) : "<missing>"; }

// Criterion 1 ----------------------------------------------------------------

void metric_oracle_agreement(Check &c) {
  auto t0 = Clock::now();
  synth::Rng rng(1001);
  auto inst = synth::instance(rng, {50, 1, 1, 1, 3});
  std::vector<std::string> hyps;
  oracle::Stats total;
  for (std::size_t s = 0; s < inst.corpus.size(); ++s) {
    hyps.push_back(inst.corpus.list(s)[0].text);
    std::vector<oracle::Words> rw;
    for (const auto &r : inst.refs.refs(s)) rw.push_back(oracle::words(r));
    oracle::add(total, oracle::sentence_stats(oracle::words(hyps.back()), rw));
    double chrf = sentence_chrf(hyps.back(), inst.refs.refs(s)).value;
    double want = oracle::sentence_chrf(hyps.back(), inst.refs.refs(s));
    c.expect(std::abs(chrf - want) < 1e-9,
             "sentence " + std::to_string(s) + " chrF " + fmt(chrf) + " vs oracle " + fmt(want));
  }
  double bleu = corpus_bleu(hyps, inst.refs).value;
  c.expect(std::abs(bleu - oracle::bleu(total)) < 1e-9,
           "corpus BLEU " + fmt(bleu) + " vs oracle " + fmt(oracle::bleu(total)));

  std::vector<std::string> identity, empty(inst.refs.size(), "");
  for (std::size_t s = 0; s < inst.refs.size(); ++s) identity.push_back(inst.refs.refs(s)[0]);
  c.expect(corpus_bleu(identity, inst.refs).value == 100.0, "identity corpus BLEU != 100");
  c.expect(corpus_chrf(identity, inst.refs).value == 100.0, "identity corpus chrF != 100");
  c.expect(corpus_bleu(empty, inst.refs).value == 0.0, "empty corpus BLEU != 0");
  c.expect(corpus_chrf(empty, inst.refs).value == 0.0, "empty corpus chrF != 0");
  for (std::size_t s = 0; s < inst.refs.size(); ++s) {
    c.expect(sentence_bleu(identity[s], inst.refs.refs(s)) == 100.0, "identity sentence BLEU");
    c.expect(sentence_chrf(identity[s], inst.refs.refs(s)).value == 100.0, "identity chrF");
    c.expect(sentence_bleu("", inst.refs.refs(s)) == 0.0, "empty sentence BLEU");
    c.expect(sentence_chrf("", inst.refs.refs(s)).value == 0.0, "empty chrF");
  }
  double elapsed = seconds_since(t0);
  c.expect(elapsed < 1.0, "runtime " + fmt(elapsed) + " s >= 1 s");
}

// Criterion 2 ----------------------------------------------------------------

void tokenizer_conformance(Check &c) {
  std::ifstream in(NBKD_FIXTURE_DIR "/tok13a_stress.jsonl");
  c.expect(static_cast<bool>(in), "fixture missing");
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    auto rec = nlohmann::json::parse(line);
    std::string got;
    for (const auto &t : tokenize_13a(rec["in"].get<std::string>())) {
      if (!got.empty()) got += ' ';
      got += t;
    }
    c.expect(got == rec["out"].get<std::string>(), "line " + std::to_string(n + 1) + " differs");
    ++n;
  }
  c.expect(n == 200, "fixture has " + std::to_string(n) + " lines");
}

// Criterion 3 ----------------------------------------------------------------

std::vector<Rank> exhaustive_argmax(const FeatureMatrix &m, const WeightVector &w) {
  std::vector<Rank> out;
  for (const auto &block : m.values) {
    std::vector<double> scores;
    for (Eigen::Index r = 0; r < block.rows(); ++r) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < block.cols(); ++j) s += block(r, j) * w.weights(j);
      scores.push_back(s);
    }
    out.push_back(oracle::argmax(scores));
  }
  return out;
}

void rerank_correctness(Check &c) {
  auto t0 = Clock::now();
  synth::Rng rng(1003);
  auto inst = synth::instance(rng, {100, 1, 8});
  std::vector<FeatureMatrix> matrices;
  for (std::size_t m = 1; m <= 6; ++m) matrices.push_back(synth::random_matrix(rng, inst.corpus, m));
  for (int trial = 0; trial < 1000; ++trial) {
    const auto &m = matrices[static_cast<std::size_t>(trial) % matrices.size()];
    auto w = synth::random_weights(rng, m.feature_names);
    auto got = rerank(m, inst.corpus, w).selections;
    c.expect(got == exhaustive_argmax(m, w), "trial " + std::to_string(trial) + " differs");
    auto scaled = w;
    scaled.weights *= std::exp(synth::real(rng, -7.0, 7.0));
    c.expect(rerank(m, inst.corpus, scaled).selections == got,
             "trial " + std::to_string(trial) + " not scale invariant");
  }
  double elapsed = seconds_since(t0);
  c.expect(elapsed < 10.0, "runtime " + fmt(elapsed) + " s >= 10 s");
}

// Criterion 4 ----------------------------------------------------------------

void distill_consistency(Check &c) {
  synth::Rng rng(1004);
  auto inst = synth::instance(rng, {60, 1, 8, 1, 2});
  for (const auto &list : inst.corpus.lists())
    for (std::size_t r = 1; r < list.size(); ++r)
      c.expect(list[r - 1].total >= list[r].total, "fixture not sorted by total");
  auto m = assemble_matrix(inst.corpus, {{"total", "lm", "tm"}, {NativeFeature::kMbrBleu}}, {});
  WeightVector one_hot{m.feature_names, Eigen::VectorXd::Zero(m.cols())};
  one_hot.weights(*m.column("total")) = 1.0;
  auto kd = kd_top1(inst.corpus).labels;
  c.expect(rerank_labels(m, inst.corpus, one_hot).labels == kd, "one-hot total rerank != kd");

  auto ki = ki_select(inst.corpus, inst.refs).labels;
  for (std::size_t s = 0; s < inst.corpus.size(); ++s) {
    double chosen = oracle::sentence_bleu(ki.at(s), inst.refs.refs(s));
    for (const auto &e : inst.corpus.list(s))
      c.expect(oracle::sentence_bleu(e.text, inst.refs.refs(s)) <= chosen + 1e-9,
               "KI not optimal at sentence " + std::to_string(s));
  }

  auto single = synth::instance(rng, {40, 1, 1});
  auto sm = assemble_matrix(single.corpus, {{"total", "lm"}, {NativeFeature::kLen}}, {});
  auto kd1 = kd_top1(single.corpus).labels;
  c.expect(ki_select(single.corpus, single.refs).labels == kd1, "n=1: KI != KD");
  for (int trial = 0; trial < 20; ++trial)
    c.expect(rerank_labels(sm, single.corpus, synth::random_weights(rng, sm.feature_names)).labels ==
                 kd1,
             "n=1: rerank != KD");
}

// Criterion 5 ----------------------------------------------------------------

void mira_planted(Check &c) {
  auto t0 = Clock::now();
  int positive = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto p = synth::planted(seed);
    MiraConfig cfg;
    cfg.seed = seed;
    cfg.epochs = 100;
    auto run = tune_mira(p.matrix, p.data.corpus, p.data.refs, cfg);
    double tuned = run.history[run.best_epoch].tune_bleu;
    double best_single = 0.0;
    for (Eigen::Index j = 0; j < p.matrix.cols(); ++j) {
      WeightVector w{p.matrix.feature_names, Eigen::VectorXd::Zero(p.matrix.cols())};
      w.weights(j) = 1.0;
      best_single =
          std::max(best_single, evaluate_weights(p.matrix, p.data.corpus, p.data.refs, w).value);
    }
    c.expect(tuned >= best_single, "seed " + std::to_string(seed) + ": tuned " + fmt(tuned) +
                                       " < best single feature " + fmt(best_single));
    c.expect(tuned >= run.history[0].tune_bleu, "seed " + std::to_string(seed) + ": below init");
    if (run.best_weights.weights(0) > 0.0) ++positive;
  }
  c.expect(positive >= 19, "sign(w0) > 0 in only " + std::to_string(positive) + "/20 seeds");
  double elapsed = seconds_since(t0);
  c.expect(elapsed < 60.0, "runtime " + fmt(elapsed) + " s >= 60 s");
}

// Criterion 6 ----------------------------------------------------------------

void oracle_sweep(Check &c) {
  synth::Rng rng(1006);
  auto inst = synth::instance(rng, {80, 8, 8});
  std::vector<std::size_t> sizes = {1, 2, 4, 8};
  auto rows = beam_sweep(inst.corpus, inst.refs, sizes);
  std::vector<double> prev_max(inst.corpus.size(), -1.0), prev_min(inst.corpus.size(), 1e9);
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    auto t = inst.corpus.truncated(sizes[i]);
    for (std::size_t s = 0; s < t.size(); ++s) {
      std::vector<double> g;
      for (const auto &e : t.list(s)) g.push_back(sentence_bleu(e.text, inst.refs.refs(s)));
      double mx = g[oracle::argmax(g)], mn = g[oracle::argmin(g)];
      c.expect(mx >= prev_max[s], "oracle decreased at sentence " + std::to_string(s));
      c.expect(mn <= prev_min[s], "anti-oracle increased at sentence " + std::to_string(s));
      prev_max[s] = mx;
      prev_min[s] = mn;
    }
    const auto &r = rows[i];
    c.expect(r.oracle >= r.top1 && r.top1 >= r.anti_oracle,
             "n=" + std::to_string(r.n) + ": " + fmt(r.anti_oracle) + " / " + fmt(r.top1) + " / " +
                 fmt(r.oracle));
  }
  c.expect(rows[0].oracle == rows[0].top1 && rows[0].anti_oracle == rows[0].top1,
           "n=1 columns differ");
}

// Criterion 7 ----------------------------------------------------------------

void model_selection(Check &c) {
  synth::Rng rng(1007);
  auto inst = synth::instance(rng, {60, 1, 8});
  auto m = synth::random_matrix(rng, inst.corpus, 6);
  for (int trial = 0; trial < 200; ++trial) {
    auto w = synth::random_weights(rng, m.feature_names);
    auto mask = select_models(w, 6);
    auto masked = rerank(m, inst.corpus, w, &mask);
    auto full = rerank(m, inst.corpus, w);
    c.expect(masked.selections == full.selections && masked.selected_texts == full.selected_texts,
             "k=M mask differs at trial " + std::to_string(trial));
  }
  WeightVector hand{{"a", "b", "c", "d"}, Eigen::Vector4d(0.2, -1.5, 1.4, 0.0)};
  c.expect(select_models(hand, 1).active == std::vector<std::string>{"b"}, "k=1 pick");
}

// Criterion 8 ----------------------------------------------------------------

struct RunOutcome {
  int status = 0;
  std::string stdout_text;
  double seconds = 0.0;
};

RunOutcome selftrain(const fs::path &config, bool resume, const fs::path &log) {
  auto t0 = Clock::now();
  RunOutcome out;
  out.status = shell(q(kCli) + " selftrain --config " + q(config) + (resume ? " --resume" : "") +
                     " > " + q(log) + " 2>&1");
  out.seconds = seconds_since(t0);
  out.stdout_text = read(log);
  return out;
}

void check_ledger(Check &c, const fs::path &workdir, std::size_t expected, const std::string &tag) {
  std::vector<IterationState> ledger;
  try {
    ledger = read_ledger(workdir);
  } catch (const std::exception &e) {
    c.expect(false, tag + ": ledger unreadable: " + e.what());
    return;
  }
  c.expect(ledger.size() == expected,
           tag + ": ledger has " + std::to_string(ledger.size()) + " entries");
  for (std::size_t i = 0; i < ledger.size(); ++i) {
    const auto &s = ledger[i];
    c.expect(s.iter == static_cast<int>(i) + 1, tag + ": iteration index");
    c.expect(fs::exists(s.weights_path) && fs::exists(s.labels_path), tag + ": artifacts");
    c.expect(!s.started.empty() && !s.finished.empty(), tag + ": timestamps");
    for (const auto &h : s.hooks) c.expect(h.exit_code == 0, tag + ": hook " + h.stage);
    try {
      read_weights(s.weights_path);
    } catch (const std::exception &e) {
      c.expect(false, tag + ": weights do not reload: " + e.what());
    }
  }
}

void pipeline_dry_run(Check &c) {
  auto root = fixture::fresh_dir("accept_pipeline");

  // Three improving iterations run to the maximum.
  fixture::Options improving;
  improving.dev_matches = {800, 900, 1000};
  auto full_cfg = fixture::build(root / "full", improving);
  auto full = selftrain(full_cfg, false, root / "full.log");
  c.expect(exit_code(full.status) == 0, "3-iteration run failed: " + full.stdout_text);
  c.expect(full.seconds < 30.0, "3-iteration run took " + fmt(full.seconds) + " s");
  c.expect(full.stdout_text.find("stop_reason\tmax_iterations\niterations\t3\nfinal_iter\t3\n") !=
               std::string::npos,
           "3-iteration summary: " + full.stdout_text);
  check_ledger(c, root / "full" / "work", 3, "full");

  // Dev BLEU 50.0 then 50.05 with min_delta 0.1 converges; best is iter 2.
  fixture::Options flat;
  flat.dev_matches = {1000, 1001, 1002};
  auto conv_cfg = fixture::build(root / "conv", flat);
  auto conv = selftrain(conv_cfg, false, root / "conv.log");
  c.expect(exit_code(conv.status) == 0, "converging run failed: " + conv.stdout_text);
  c.expect(conv.stdout_text.find("stop_reason\tconverged\niterations\t2\nfinal_iter\t2\n"
                                 "final_dev_bleu\t50.0500\n") != std::string::npos,
           "converging summary: " + conv.stdout_text);
  check_ledger(c, root / "conv" / "work", 2, "conv");
  auto conv_ledger = read_ledger(root / "conv" / "work");
  if (conv_ledger.size() == 2) {
    c.expect(std::abs(conv_ledger[0].dev_bleu - 50.0) < 1e-9, "iter 1 dev BLEU");
    c.expect(std::abs(conv_ledger[1].dev_bleu - 50.05) < 1e-9, "iter 2 dev BLEU");
    c.expect(read(root / "conv" / "work" / "final.tgt") == read(conv_ledger[1].labels_path),
             "final labels are not from iter 2");
  }

  // Kill the orchestrator in the middle of iteration 2, then resume.
  fixture::Options killed = improving;
  auto flag = root / "killed" / "kill.flag";
  killed.generate_prefix = "if [ {ITER} = 2 ] && [ {SET} = transfer ] && [ ! -e " + q(flag) +
                           " ]; then touch " + q(flag) + "; kill -9 $PPID; exit 1; fi; ";
  auto kill_cfg = fixture::build(root / "killed", killed);
  auto first = selftrain(kill_cfg, false, root / "killed1.log");
  c.expect(exit_code(first.status) != 0, "the killed run reported success");
  c.expect(fs::exists(flag), "the kill hook never fired");
  auto work = root / "killed" / "work";
  c.expect(fs::exists(work / "iter2" / ".started") &&
               !fs::exists(work / "iter2" / ".generate_nbest.done"),
           "iteration 2 was not interrupted mid-stage");
  c.expect(read_ledger(work).size() == 1, "ledger after kill should hold iteration 1 only");
  auto second = selftrain(kill_cfg, true, root / "killed2.log");
  c.expect(exit_code(second.status) == 0, "resume failed: " + second.stdout_text);
  check_ledger(c, work, 3, "resumed");
  for (const char *name : {"final.src", "final.tgt", "final.json"})
    c.expect(read(work / name) == read(root / "full" / "work" / name),
             std::string(name) + " differs from the uninterrupted run");
  for (int it = 1; it <= 3; ++it) {
    auto sub = "iter" + std::to_string(it);
    for (const char *name : {"weights.tsv", "transfer.labels.tgt", "dev_eval.tsv"})
      c.expect(read(work / sub / name) == read(root / "full" / "work" / sub / name),
               sub + "/" + name + " differs from the uninterrupted run");
  }
  fs::remove_all(root);
}

// Criterion 9 ----------------------------------------------------------------

void determinism(Check &c) {
  auto root = fixture::fresh_dir("accept_determinism");
  synth::Rng rng(1009);
  auto inst = synth::instance(rng, {40, 1, 8, 1, 2});
  auto write = [&](const fs::path &p, const std::string &text) { fixture::write_text(p, text); };
  write(root / "in.nbest", fixture::nbest_text(inst.corpus));
  write(root / "in.ext.scores", fixture::ext_scores(inst.corpus));
  write(root / "in.src", fixture::lines(inst.sources));
  std::vector<std::string> r0, r1, top1;
  for (std::size_t s = 0; s < inst.refs.size(); ++s) {
    r0.push_back(inst.refs.refs(s)[0]);
    r1.push_back(inst.refs.refs(s).size() > 1 ? inst.refs.refs(s)[1] : "");
    top1.push_back(inst.corpus.list(s)[0].text);
  }
  write(root / "ref0", fixture::lines(r0));
  write(root / "ref1", fixture::lines(r1));
  write(root / "hyp", fixture::lines(top1));
  const std::string refs = q(root / "ref0") + "," + q(root / "ref1");

  auto run_all = [&](const fs::path &out) {
    fs::create_directories(out);
    std::vector<std::string> cmds = {
        "evaluate --hyp " + q(root / "hyp") + " --refs " + refs + " --metric bleu > " +
            q(out / "bleu.txt"),
        "evaluate --hyp " + q(root / "hyp") + " --refs " + refs + " --metric chrf > " +
            q(out / "chrf.txt"),
        "assemble --nbest " + q(root / "in.nbest") +
            " --passthrough total,lm --native mbr_bleu,mbr_chrf,len,len_ratio --scores ext=" +
            q(root / "in.ext.scores") + " --threads 3 --out " + q(out / "matrix.tsv"),
        "tune --matrix " + q(out / "matrix.tsv") + " --nbest " + q(root / "in.nbest") +
            " --refs " + refs + " --epochs 8 --seed 42 --out " + q(out / "weights.tsv"),
        "rerank --matrix " + q(out / "matrix.tsv") + " --nbest " + q(root / "in.nbest") +
            " --weights " + q(out / "weights.tsv") + " --top-k-models 3 --refs " + refs +
            " --report --out " + q(out / "selections.tsv") + " 2> " + q(out / "rerank.report"),
        "oracle --nbest " + q(root / "in.nbest") + " --refs " + refs + " --sweep 1,2,4,8 --out " +
            q(out / "sweep.tsv") + " 2> " + q(out / "sweep.err"),
        "oracle --nbest " + q(root / "in.nbest") + " --refs " + refs + " --mode anti --out " +
            q(out / "anti.tsv") + " 2> " + q(out / "anti.err"),
        "distill --strategy kd --nbest " + q(root / "in.nbest") + " --src " + q(root / "in.src") +
            " --out " + q(out / "kd") + " 2> /dev/null",
        "distill --strategy ki --nbest " + q(root / "in.nbest") + " --src " + q(root / "in.src") +
            " --orig-refs " + refs + " --format tsv --out " + q(out / "ki") + " 2> /dev/null",
        "distill --strategy rerank --nbest " + q(root / "in.nbest") + " --src " +
            q(root / "in.src") + " --matrix " + q(out / "matrix.tsv") + " --weights " +
            q(out / "weights.tsv") + " --out " + q(out / "rr") + " 2> /dev/null",
        "mix --bitext-src " + q(out / "kd.src") + " --bitext-tgt " + q(out / "kd.tgt") +
            " --mono-src " + q(out / "rr.src") + " --mono-tgt " + q(out / "rr.tgt") +
            " --mode bitext_plus_mono --out " + q(out / "mix") + " 2> /dev/null",
    };
    for (const auto &cmd : cmds) {
      int st = shell(q(kCli) + " " + cmd);
      c.expect(exit_code(st) == 0, "command failed: " + cmd);
    }
    fixture::Options opt;
    opt.dev_matches = {800, 900, 1000};
    auto cfg = fixture::build(out / "st", opt);
    c.expect(exit_code(shell(q(kCli) + " selftrain --config " + q(cfg) + " > " +
                             q(out / "selftrain.txt"))) == 0,
             "selftrain failed");
    c.expect(exit_code(shell(q(kCli) + " status --workdir " + q(out / "st" / "work") + " > " +
                             q(out / "status1.txt"))) == 0,
             "status failed");
    c.expect(exit_code(shell(q(kCli) + " status --workdir " + q(out / "st" / "work") + " > " +
                             q(out / "status2.txt"))) == 0,
             "status failed");
  };
  run_all(root / "a");
  run_all(root / "b");

  for (const char *name :
       {"bleu.txt", "chrf.txt", "matrix.tsv", "weights.tsv", "selections.tsv", "rerank.report",
        "sweep.tsv", "sweep.err", "anti.tsv", "anti.err", "kd.src", "kd.tgt", "ki.tsv", "rr.src",
        "rr.tgt", "mix.src", "mix.tgt", "selftrain.txt", "st/work/final.src",
        "st/work/final.tgt", "st/work/final.json"}) {
    auto a = read(root / "a" / name), b = read(root / "b" / name);
    c.expect(a != "<missing>" && a == b, std::string(name) + " differs between runs");
  }
  for (int it = 1; it <= 3; ++it)
    for (const char *name : {"weights.tsv", "mask.txt", "transfer.labels.src",
                             "transfer.labels.tgt", "dev.selections.tsv", "dev_eval.tsv",
                             "tune.matrix.tsv", "dev.matrix.tsv", "transfer.matrix.tsv"}) {
      auto rel = fs::path("st/work") / ("iter" + std::to_string(it)) / name;
      auto a = read(root / "a" / rel), b = read(root / "b" / rel);
      c.expect(a != "<missing>" && a == b, rel.string() + " differs between runs");
    }
  // Ledgers agree once timestamps and absolute paths are set aside.
  auto la = read_ledger(root / "a" / "st" / "work"), lb = read_ledger(root / "b" / "st" / "work");
  c.expect(la.size() == lb.size(), "ledger sizes differ");
  for (std::size_t i = 0; i < std::min(la.size(), lb.size()); ++i) {
    c.expect(la[i].iter == lb[i].iter && la[i].dev_bleu == lb[i].dev_bleu &&
                 la[i].hooks == lb[i].hooks,
             "ledger entry " + std::to_string(i) + " differs");
  }
  c.expect(read(root / "a" / "status1.txt") == read(root / "a" / "status2.txt"),
           "status output changed between calls");
  fs::remove_all(root);
}

}  // namespace

int main() {
  struct Criterion {
    const char *name;
    std::function<void(Check &)> body;
  };
  const std::vector<Criterion> criteria = {
      {"metric oracle agreement", metric_oracle_agreement},
      {"tokenizer conformance", tokenizer_conformance},
      {"rerank correctness", rerank_correctness},
      {"KD/KI/rerank consistency", distill_consistency},
      {"MIRA planted-weight recovery", mira_planted},
      {"oracle sweep properties", oracle_sweep},
      {"model selection consistency", model_selection},
      {"pipeline dry run", pipeline_dry_run},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check check;
    auto t0 = Clock::now();
    try {
      criteria[i].body(check);
    } catch (const std::exception &e) {
      check.expect(false, std::string("exception: ") + e.what());
    }
    double elapsed = seconds_since(t0);
    char head[160];
    std::snprintf(head, sizeof head, "[%s] criterion %zu: %s (%.2f s)",
                  check.ok() ? "PASS" : "FAIL", i + 1, criteria[i].name, elapsed);
    std::cout << head << '\n';
    for (const auto &f : check.failures) std::cout << "       " << f << '\n';
    if (!check.ok()) ++failed;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size()
            << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
