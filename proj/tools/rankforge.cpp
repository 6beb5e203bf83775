// Copyright 2026 The RankForge Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: index, retrieve, train, rerank, evaluate, compare,
// synth, experiment. Errors print one line `error[<kind>]: <message>` on
// stderr and exit with status 1.

#include <fmt/format.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "rankforge/error.hpp"
#include "rankforge/evaluation.hpp"
#include "rankforge/experiment.hpp"
#include "rankforge/io.hpp"
#include "rankforge/retrieval.hpp"
#include "rankforge/scorer.hpp"
#include "rankforge/synth.hpp"
#include "rankforge/training.hpp"

namespace fs = std::filesystem;
using namespace rankforge;

namespace {

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_text_file(path, text);
  }
}

ExperimentConfig config_from(const std::string& path, const std::optional<std::uint64_t>& seed,
                             const std::string& out) {
  ExperimentConfig config = path.empty() ? default_experiment_config() : load_experiment_config(path);
  if (seed) {
    // An explicit seed re-derives the sub-seeds; explicit sub-seeds in the
    // file are intentionally overridden by the flag.
    apply_seed(config, *seed);
  }
  if (!out.empty()) config.out = out;
  return config;
}

std::vector<MetricSpec> metrics_from(const std::vector<std::string>& names, const std::string& preset) {
  if (!names.empty()) {
    std::vector<MetricSpec> specs;
    for (const auto& n : names) specs.push_back(parse_metric_spec(n));
    return specs;
  }
  if (preset == "dl") return dl_metrics();
  if (preset != "default") {
    throw Error(ErrorKind::kInvalidArgument, fmt::format("unknown metric preset '{}'", preset));
  }
  return default_metrics();
}

std::string summarize(const std::vector<MetricReport>& reports) {
  std::string out;
  for (const auto& r : reports) {
    out += fmt::format("{}\t{:.4f}\t{}\n", r.metric, r.mean, r.per_query.size());
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rankforge: fine-tuning and evaluation toolkit for point-wise re-rankers"};
  app.require_subcommand(1);

  Bm25Params bm25;
  auto add_bm25 = [&](CLI::App* cmd) {
    cmd->add_option("--k1", bm25.k1, "BM25 k1")->capture_default_str();
    cmd->add_option("--b", bm25.b, "BM25 b")->capture_default_str();
  };

  // index
  std::string corpus_path;
  auto* index_cmd = app.add_subcommand("index", "Build the BM25 index and print its statistics");
  index_cmd->add_option("--corpus", corpus_path, "Corpus TSV (doc_id<TAB>text)")->required();

  // retrieve
  std::string queries_path, out_path;
  std::size_t k = 100;
  auto* retrieve_cmd = app.add_subcommand("retrieve", "BM25 top-k retrieval to a TREC run");
  retrieve_cmd->add_option("--corpus", corpus_path, "Corpus TSV")->required();
  retrieve_cmd->add_option("--queries", queries_path, "Queries TSV")->required();
  retrieve_cmd->add_option("--k,--depth", k, "Depth of the ranking")->capture_default_str();
  retrieve_cmd->add_option("--out", out_path, "Output run (stdout when absent)");
  add_bm25(retrieve_cmd);

  // train
  std::string config_path, plan_name;
  std::optional<std::uint64_t> seed;
  auto* train_cmd = app.add_subcommand("train", "Train one plan; writes <out>/<plan>/params.bin");
  train_cmd->add_option("--config", config_path, "Experiment config JSON (default: synthetic)");
  train_cmd->add_option("--plan", plan_name, "C, D, C->D, D->C, NCE or BCE")->required();
  train_cmd->add_option("--seed", seed, "Master seed");
  train_cmd->add_option("--out", out_path, "Output directory");

  // rerank
  std::string run_path, params_path, tag = "rerank";
  std::size_t depth = kDefaultRerankDepth;
  auto* rerank_cmd = app.add_subcommand("rerank", "Re-rank a run with a trained scorer");
  rerank_cmd->add_option("--corpus", corpus_path, "Corpus TSV")->required();
  rerank_cmd->add_option("--queries", queries_path, "Queries TSV")->required();
  rerank_cmd->add_option("--run", run_path, "First-stage TREC run")->required();
  rerank_cmd->add_option("--params", params_path, "Checkpoint (params.bin)")->required();
  rerank_cmd->add_option("--depth", depth, "Re-rank depth")->capture_default_str();
  rerank_cmd->add_option("--tag", tag, "Run tag")->capture_default_str();
  rerank_cmd->add_option("--out", out_path, "Output run (stdout when absent)");
  add_bm25(rerank_cmd);

  // evaluate
  std::string qrels_path, preset = "default";
  std::vector<std::string> metric_names;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Per-query metrics CSV for a run");
  evaluate_cmd->add_option("--run", run_path, "TREC run")->required();
  evaluate_cmd->add_option("--qrels", qrels_path, "TREC qrels")->required();
  evaluate_cmd->add_option("--metric", metric_names, "Metric, e.g. AP, nDCG@10, MRR@10:rel=2");
  evaluate_cmd->add_option("--preset", preset, "default or dl")->capture_default_str();
  evaluate_cmd->add_option("--out", out_path, "CSV output (qid,metric,value)");

  // compare
  std::string baseline_path, baseline_label = "baseline", title = "Comparison";
  std::vector<std::string> variant_paths, labels, pair_specs;
  auto* compare_cmd = app.add_subcommand("compare", "Significance-marked comparison table");
  compare_cmd->add_option("--baseline", baseline_path, "Baseline run")->required();
  compare_cmd->add_option("--baseline-label", baseline_label)->capture_default_str();
  compare_cmd->add_option("--variant", variant_paths, "Variant run (repeatable)");
  compare_cmd->add_option("--label", labels, "Label per variant (default: file stem)");
  compare_cmd->add_option("--pair", pair_specs,
                          "Sibling pair i,j of variant indices (default: 0,1 2,3 ...)");
  compare_cmd->add_option("--qrels", qrels_path, "TREC qrels")->required();
  compare_cmd->add_option("--metric", metric_names, "Metric (repeatable)");
  compare_cmd->add_option("--preset", preset, "default or dl")->capture_default_str();
  compare_cmd->add_option("--title", title)->capture_default_str();
  compare_cmd->add_option("--out", out_path, "Output directory (stdout markdown when absent)");

  // synth
  std::optional<double> sigma;
  auto* synth_cmd = app.add_subcommand("synth", "Generate the synthetic benchmark");
  synth_cmd->add_option("--config", config_path, "Experiment config JSON (its synth section)");
  synth_cmd->add_option("--seed", seed, "Generator seed");
  synth_cmd->add_option("--sigma", sigma, "Teacher noise standard deviation");
  synth_cmd->add_option("--out", out_path, "Output directory")->required();

  // experiment
  auto* experiment_cmd = app.add_subcommand("experiment", "Train all plans and emit the comparison tables");
  experiment_cmd->add_option("--config", config_path, "Experiment config JSON (default: synthetic)");
  experiment_cmd->add_option("--seed", seed, "Master seed");
  experiment_cmd->add_option("--out", out_path, "Output directory");
  experiment_cmd->add_option("--depth", depth, "Re-rank depth");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*index_cmd) {
      const Corpus corpus = load_corpus(corpus_path);
      const InvertedIndex index = InvertedIndex::build(corpus);
      nlohmann::json j{{"documents", index.doc_count()},
                       {"terms", index.term_count()},
                       {"avg_doc_length", index.avg_doc_length()}};
      std::cout << j.dump() << '\n';
    } else if (*retrieve_cmd) {
      validate(bm25);
      const Corpus corpus = load_corpus(corpus_path);
      const auto queries = load_queries(queries_path);
      const InvertedIndex index = InvertedIndex::build(corpus);
      std::vector<Ranking> runs;
      for (const Query& q : queries) runs.push_back(retrieve_topk(index, bm25, q, k));
      emit(out_path, format_run(runs, "bm25"));
    } else if (*train_cmd) {
      ExperimentConfig config = config_from(config_path, seed, out_path);
      validate(config);
      const Workspace ws = prepare_workspace(config);
      Trainer trainer(config, ws);
      const PlanResult result = trainer.train(plan_name);
      const fs::path dir = config.out / plan_directory(plan_name);
      write_plan_outputs(result, dir);
      std::cout << (dir / "params.bin").string() << '\n';
    } else if (*rerank_cmd) {
      validate(bm25);
      const Corpus corpus = load_corpus(corpus_path);
      const auto queries = load_queries(queries_path);
      const auto runs = load_run(run_path);
      std::ifstream in(params_path, std::ios::binary);
      if (!in) throw Error(ErrorKind::kIo, fmt::format("cannot open '{}'", params_path));
      const ScorerParams params = load_params(in);
      const InvertedIndex index = InvertedIndex::build(corpus);
      emit(out_path, format_run(rerank_all(queries, runs, params, corpus, index, bm25, depth), tag));
    } else if (*evaluate_cmd) {
      const auto reports = evaluate_run(load_run(run_path), load_qrels(qrels_path),
                                        metrics_from(metric_names, preset));
      std::ostringstream csv;
      write_report_csv(csv, reports);
      if (out_path.empty()) {
        std::cout << csv.str();
      } else {
        write_text_file(out_path, csv.str());
        std::cout << summarize(reports);
      }
    } else if (*compare_cmd) {
      const Qrels qrels = load_qrels(qrels_path);
      const auto metrics = metrics_from(metric_names, preset);
      if (!labels.empty() && labels.size() != variant_paths.size()) {
        throw Error(ErrorKind::kInvalidArgument, "--label must be given once per --variant");
      }
      std::vector<TableColumn> columns;
      for (const auto& m : metrics) columns.push_back({"", m});
      const SystemReports baseline{baseline_label, evaluate_run(load_run(baseline_path), qrels, metrics)};
      std::vector<SystemReports> variants;
      for (std::size_t i = 0; i < variant_paths.size(); ++i) {
        const std::string label = labels.empty() ? fs::path(variant_paths[i]).stem().string() : labels[i];
        variants.push_back({label, evaluate_run(load_run(variant_paths[i]), qrels, metrics)});
      }
      std::vector<std::pair<std::size_t, std::size_t>> pairs;
      if (pair_specs.empty()) {
        for (std::size_t i = 0; i + 1 < variants.size(); i += 2) pairs.emplace_back(i, i + 1);
      }
      for (const auto& spec : pair_specs) {
        std::size_t a = 0, b = 0;
        char comma = 0;
        std::istringstream s(spec);
        if (!(s >> a >> comma >> b) || comma != ',' || !s.eof()) {
          throw Error(ErrorKind::kInvalidArgument, fmt::format("bad --pair '{}', expected i,j", spec));
        }
        pairs.emplace_back(a, b);
      }
      const std::string md = render_markdown(build_table(title, columns, baseline, variants, pairs));
      if (out_path.empty()) {
        std::cout << md;
      } else {
        const fs::path dir(out_path);
        write_text_file(dir / "report.md", md);
        std::ostringstream csv;
        write_report_csv(csv, baseline.cells);
        write_text_file(dir / (baseline.label + ".csv"), csv.str());
        for (const auto& v : variants) {
          std::ostringstream vcsv;
          write_report_csv(vcsv, v.cells);
          write_text_file(dir / (v.label + ".csv"), vcsv.str());
        }
        std::cout << md;
      }
    } else if (*synth_cmd) {
      ExperimentConfig config = config_from(config_path, std::nullopt, "");
      SynthSpec spec = config.synth;
      if (seed) spec.seed = *seed;
      if (sigma) spec.teacher_noise = *sigma;
      write_synthetic(generate_synthetic(spec), out_path);
    } else if (*experiment_cmd) {
      ExperimentConfig config = config_from(config_path, seed, out_path);
      if (experiment_cmd->count("--depth") > 0) config.rerank_depth = depth;
      const ExperimentSummary summary = run_experiment(config);
      std::cout << summary.report_markdown;
    }
  } catch (const Error& e) {
    std::cerr << "error[" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
