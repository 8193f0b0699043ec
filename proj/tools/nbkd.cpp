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
// nbkd: n-best reranking toolkit for distillation pseudo-labels.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nbkd/corpus.hpp"
#include "nbkd/distill.hpp"
#include "nbkd/features.hpp"
#include "nbkd/metrics.hpp"
#include "nbkd/mira.hpp"
#include "nbkd/pipeline.hpp"
#include "nbkd/rerank.hpp"
#include "nbkd/util.hpp"

namespace fs = std::filesystem;
using namespace nbkd;

namespace {

std::vector<fs::path> path_list(const std::string &csv) {
  std::vector<fs::path> out;
  for (const auto &p : detail::split(csv, ','))
    if (!p.empty()) out.emplace_back(p);
  return out;
}

// Raw lines; empty hypotheses are legal.
std::vector<std::string> read_lines(const fs::path &path) {
  std::istringstream in(detail::read_file(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

void emit(const std::string &out_path, const std::string &content) {
  if (out_path.empty() || out_path == "-")
    std::cout << content;
  else
    detail::write_file_atomic(out_path, content);
}

template <typename F>
std::string render(F &&writer) {
  std::ostringstream out;
  writer(out);
  return out.str();
}

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::optional<SelectionMask> mask_for(const WeightVector &w, std::size_t k) {
  if (k == 0) return std::nullopt;
  return select_models(w, k);
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"n-best reranking toolkit for knowledge-distillation pseudo-labels"};
  app.require_subcommand(1);

  // evaluate
  auto *evaluate = app.add_subcommand("evaluate", "Corpus BLEU or chrF of a hypothesis file");
  std::string eval_hyp, eval_refs, eval_metric = "bleu";
  evaluate->add_option("--hyp", eval_hyp, "Hypotheses, one per line")->required();
  evaluate->add_option("--refs", eval_refs, "Reference files, comma-separated")->required();
  evaluate->add_option("--metric", eval_metric)->check(CLI::IsMember({"bleu", "chrf"}));

  // assemble
  auto *assemble = app.add_subcommand("assemble", "Build the feature matrix for an n-best file");
  std::string asm_nbest, asm_native, asm_passthrough, asm_out;
  std::vector<std::string> asm_scores;
  unsigned asm_threads = 1;
  assemble->add_option("--nbest", asm_nbest)->required();
  assemble->add_option("--native", asm_native, "mbr_bleu,mbr_chrf,len,len_ratio");
  assemble->add_option("--passthrough", asm_passthrough, "Teacher score names, or 'total'");
  assemble->add_option("--scores", asm_scores, "External scores as NAME=FILE")->expected(0, -1);
  assemble->add_option("--threads", asm_threads);
  assemble->add_option("--out", asm_out, "Matrix TSV (default stdout)");

  // tune
  auto *tune = app.add_subcommand("tune", "Learn reranker weights with batch MIRA");
  std::string tune_matrix, tune_nbest, tune_refs, tune_out, tune_init = "default", tune_init_file;
  MiraConfig mira;
  tune->add_option("--matrix", tune_matrix)->required();
  tune->add_option("--nbest", tune_nbest)->required();
  tune->add_option("--refs", tune_refs)->required();
  tune->add_option("--c", mira.c);
  tune->add_option("--epochs", mira.epochs);
  tune->add_option("--seed", mira.seed);
  tune->add_option("--init", tune_init)->check(CLI::IsMember({"default", "zeros", "uniform", "given"}));
  tune->add_option("--init-weights", tune_init_file);
  tune->add_option("--out", tune_out);

  // rerank
  auto *rr = app.add_subcommand("rerank", "Select one hypothesis per sentence with learned weights");
  std::string rr_matrix, rr_nbest, rr_weights, rr_out, rr_refs;
  std::size_t rr_k = kDefaultTopKModels;
  bool rr_report = false;
  rr->add_option("--matrix", rr_matrix)->required();
  rr->add_option("--nbest", rr_nbest)->required();
  rr->add_option("--weights", rr_weights)->required();
  rr->add_option("--top-k-models", rr_k, "Active features by |weight|; 0 keeps all");
  rr->add_option("--out", rr_out);
  rr->add_option("--refs", rr_refs);
  rr->add_flag("--report", rr_report, "Print corpus BLEU of the selections (needs --refs)");

  // oracle
  auto *oracle = app.add_subcommand("oracle", "Oracle / anti-oracle selection and beam sweeps");
  std::string or_nbest, or_refs, or_mode = "oracle", or_sweep, or_out;
  oracle->add_option("--nbest", or_nbest)->required();
  oracle->add_option("--refs", or_refs)->required();
  oracle->add_option("--mode", or_mode)->check(CLI::IsMember({"oracle", "anti"}));
  oracle->add_option("--sweep", or_sweep, "Comma-separated list sizes, e.g. 1,2,4,8");
  oracle->add_option("--out", or_out);

  // distill
  auto *distill = app.add_subcommand("distill", "Write a pseudo-label data set");
  std::string ds_strategy, ds_nbest, ds_src, ds_matrix, ds_weights, ds_orig, ds_out,
      ds_format = "parallel";
  std::size_t ds_k = kDefaultTopKModels;
  distill->add_option("--strategy", ds_strategy)->required()->check(CLI::IsMember({"kd", "ki", "rerank"}));
  distill->add_option("--nbest", ds_nbest)->required();
  distill->add_option("--src", ds_src, "Source sentences of the n-best file")->required();
  distill->add_option("--matrix", ds_matrix);
  distill->add_option("--weights", ds_weights);
  distill->add_option("--top-k-models", ds_k, "0 keeps all features");
  distill->add_option("--orig-refs", ds_orig);
  distill->add_option("--out", ds_out, "Output prefix")->required();
  distill->add_option("--format", ds_format)->check(CLI::IsMember({"parallel", "tsv"}));

  // mix
  auto *mix = app.add_subcommand("mix", "Concatenate labelled bitext and monolingual transfer sets");
  std::string mx_bsrc, mx_btgt, mx_msrc, mx_mtgt, mx_mode, mx_out, mx_format = "parallel";
  mix->add_option("--bitext-src", mx_bsrc);
  mix->add_option("--bitext-tgt", mx_btgt);
  mix->add_option("--mono-src", mx_msrc);
  mix->add_option("--mono-tgt", mx_mtgt);
  mix->add_option("--mode", mx_mode)->required()->check(
      CLI::IsMember({"bitext_only", "bitext_plus_mono", "mono_only"}));
  mix->add_option("--out", mx_out)->required();
  mix->add_option("--format", mx_format)->check(CLI::IsMember({"parallel", "tsv"}));

  // selftrain / status
  auto *selftrain = app.add_subcommand("selftrain", "Run the iterative self-training loop");
  std::string st_config;
  bool st_resume = false;
  selftrain->add_option("--config", st_config)->required();
  selftrain->add_flag("--resume", st_resume);

  auto *status = app.add_subcommand("status", "Print the iteration ledger");
  std::string status_dir;
  status->add_option("--workdir", status_dir)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*evaluate) {
      auto hyps = read_lines(eval_hyp);
      auto refs = load_references(path_list(eval_refs));
      if (eval_metric == "bleu") {
        auto score = corpus_bleu(hyps, refs);
        std::cout << "BLEU\t" << fixed4(score.value) << "\n#signature\t"
                  << bleu_signature(refs.max_refs()) << '\n';
      } else {
        auto score = corpus_chrf(hyps, refs);
        std::cout << "chrF\t" << fixed4(score.value) << "\n#signature\t"
                  << chrf_signature(refs.max_refs()) << '\n';
      }
    } else if (*assemble) {
      auto corpus = load_nbest(fs::path(asm_nbest));
      FeatureSpec spec;
      for (const auto &n : detail::split(asm_passthrough, ','))
        if (!n.empty()) spec.passthrough.push_back(n);
      for (const auto &n : detail::split(asm_native, ','))
        if (!n.empty()) spec.native.push_back(parse_native_feature(n));
      std::vector<ExternalScoreTable> tables;
      for (const auto &arg : asm_scores) {
        auto eq = arg.find('=');
        if (eq == std::string::npos || eq == 0) throw Error("--scores expects NAME=FILE, got " + arg);
        tables.push_back(load_scores(fs::path(arg.substr(eq + 1)), arg.substr(0, eq)));
      }
      auto matrix = assemble_matrix(corpus, spec, tables, asm_threads);
      emit(asm_out, render([&](std::ostream &o) { write_matrix(o, matrix); }));
    } else if (*tune) {
      mira.init = parse_init_mode(tune_init);
      if (!tune_init_file.empty()) mira.given = read_weights(fs::path(tune_init_file));
      auto matrix = read_matrix(fs::path(tune_matrix));
      auto corpus = load_nbest(fs::path(tune_nbest));
      auto refs = load_references(path_list(tune_refs));
      auto run = tune_mira(matrix, corpus, refs, mira);
      emit(tune_out, render([&](std::ostream &o) { write_weights(o, run.best_weights, &run); }));
    } else if (*rr) {
      if (rr_report && rr_refs.empty()) throw Error("--report needs --refs");
      auto matrix = read_matrix(fs::path(rr_matrix));
      auto corpus = load_nbest(fs::path(rr_nbest));
      auto weights = read_weights(fs::path(rr_weights));
      auto mask = mask_for(weights, rr_k);
      std::optional<ReferenceSet> refs;
      if (!rr_refs.empty()) refs = load_references(path_list(rr_refs));
      auto result = rerank(matrix, corpus, weights, mask ? &*mask : nullptr, refs ? &*refs : nullptr);
      emit(rr_out, render([&](std::ostream &o) { write_selections(o, result); }));
      if (rr_report && result.corpus_score)
        std::cerr << "BLEU\t" << fixed4(result.corpus_score->value) << "\n#signature\t"
                  << bleu_signature(refs->max_refs()) << '\n';
    } else if (*oracle) {
      auto corpus = load_nbest(fs::path(or_nbest));
      auto refs = load_references(path_list(or_refs));
      std::cerr << "# greedy per-sentence selection by smoothed sentence BLEU\n";
      if (!or_sweep.empty()) {
        std::vector<std::size_t> sizes;
        for (const auto &s : detail::split(or_sweep, ',')) {
          auto n = detail::parse_index(detail::trim(s));
          if (!n) throw Error("bad --sweep entry '" + s + "'");
          sizes.push_back(*n);
        }
        auto rows = beam_sweep(corpus, refs, sizes);
        emit(or_out, render([&](std::ostream &o) { write_sweep(o, rows); }));
        for (const auto &r : rows)
          if (r.short_lists > 0)
            std::cerr << "# warning: n=" << r.n << ": " << r.short_lists
                      << " list(s) shorter than n, used whole\n";
      } else {
        auto result = oracle_select(corpus, refs, parse_oracle_mode(or_mode));
        emit(or_out, render([&](std::ostream &o) { write_selections(o, result); }));
        std::cerr << "BLEU\t" << fixed4(result.corpus_score->value) << '\n';
      }
    } else if (*distill) {
      auto corpus = load_nbest(fs::path(ds_nbest));
      auto sources = load_lines(fs::path(ds_src));
      PseudoLabelSet labels;
      switch (parse_strategy(ds_strategy)) {
        case Strategy::kKdTop1:
          labels = kd_top1(corpus);
          break;
        case Strategy::kKi:
          if (ds_orig.empty()) throw Error("strategy ki needs --orig-refs");
          labels = ki_select(corpus, load_references(path_list(ds_orig)));
          break;
        case Strategy::kRerank: {
          if (ds_matrix.empty() || ds_weights.empty())
            throw Error("strategy rerank needs --matrix and --weights");
          auto matrix = read_matrix(fs::path(ds_matrix));
          auto weights = read_weights(fs::path(ds_weights));
          auto mask = mask_for(weights, ds_k);
          labels = rerank_labels(matrix, corpus, weights, mask ? &*mask : nullptr);
          break;
        }
      }
      for (const auto &p : write_pseudo_labels(sources, labels.labels,
                                               parse_label_format(ds_format), fs::path(ds_out)))
        std::cerr << "wrote " << p.string() << '\n';
    } else if (*mix) {
      auto load = [](const std::string &src, const std::string &tgt) -> std::optional<LabeledSources> {
        if (src.empty() && tgt.empty()) return std::nullopt;
        if (src.empty() || tgt.empty()) throw Error("each transfer set needs both -src and -tgt");
        std::ifstream s(src), t(tgt);
        if (!s || !t) throw Error("cannot open " + src + " or " + tgt);
        auto [sources, refs] = load_parallel(s, t);
        LabeledSources out{std::move(sources), {}};
        for (std::size_t i = 0; i < refs.size(); ++i) out.labels.labels.emplace(i, refs.refs(i)[0]);
        return out;
      };
      auto merged = mix_transfer_sets(load(mx_bsrc, mx_btgt), load(mx_msrc, mx_mtgt),
                                      parse_transfer_mode(mx_mode));
      for (const auto &p : write_pseudo_labels(merged.sources, merged.labels,
                                               parse_label_format(mx_format), fs::path(mx_out)))
        std::cerr << "wrote " << p.string() << '\n';
    } else if (*selftrain) {
      auto config = load_config(st_config);
      auto result = run_selftrain(config, st_resume);
      std::cout << "stop_reason\t" << stop_reason_name(result.stop_reason) << "\niterations\t"
                << result.history.size() << "\nfinal_iter\t" << result.final_state.iter
                << "\nfinal_dev_bleu\t" << fixed4(result.final_state.dev_bleu) << '\n';
    } else if (*status) {
      print_status(std::cout, read_ledger(status_dir));
    }
  } catch (const std::exception &e) {
    std::cerr << "nbkd: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
