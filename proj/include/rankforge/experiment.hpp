// Copyright 2026 The RankForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rankforge/evaluation.hpp"
#include "rankforge/retrieval.hpp"
#include "rankforge/scorer.hpp"
#include "rankforge/synth.hpp"
#include "rankforge/training.hpp"

namespace rankforge {

/// Input files. Either every required path is set or `synth` generates the
/// data into `<out>/data`. A run of "build" means BM25 over the corpus.
struct DataPaths {
  std::string corpus;
  std::string queries;       // training queries
  std::string eval_queries;  // queries re-ranked and evaluated
  std::string qrels;
  std::string teacher;       // optional unless a plan distills
  std::string run = "build";  // first-stage run for the evaluation queries
  std::string train_run;      // first-stage run for training; empty = same as run
};

struct ExperimentConfig {
  std::uint64_t seed = 42;
  std::filesystem::path out = "rankforge-out";
  std::optional<DataPaths> data;
  SynthSpec synth;
  Bm25Params bm25;
  std::size_t first_stage_depth = 100;
  std::size_t rerank_depth = kDefaultRerankDepth;
  ScorerConfig scorer;
  PlanPresets presets = PlanPresets::desk_scale();
  double validation_fraction = 0.01;  // 0 disables the validation split
  std::uint64_t split_seed = 0;
  int positive_threshold = 1;
  std::vector<std::string> plans = {"C", "D", "C->D", "D->C"};
  std::vector<MetricSpec> metrics = default_metrics();
  std::string query_set = "eval";  // column label in the tables
};

/// Parses the JSON schema documented in the README. Unknown keys are
/// rejected. Seeds not given explicitly are derived from `seed`.
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
/// The reference synthetic setup.
ExperimentConfig default_experiment_config();
/// Re-derives every sub-seed from a new master seed.
void apply_seed(ExperimentConfig& config, std::uint64_t seed);
/// Throws on duplicate or unknown plan names, bad presets, missing paths.
void validate(const ExperimentConfig& config);

/// Everything a command needs after loading: corpus, index, queries,
/// first-stage runs, and the training context.
struct Workspace {
  Corpus corpus;
  InvertedIndex index;
  std::vector<Query> train_queries;
  std::vector<Query> eval_queries;
  Qrels qrels;
  std::vector<TeacherRanking> teacher;
  std::vector<Ranking> train_runs;
  std::vector<Ranking> eval_runs;
};

/// Loads or generates data. Synthetic data is also written to `data_dir`
/// when that is non-empty.
Workspace prepare_workspace(const ExperimentConfig& config,
                            const std::filesystem::path& data_dir = {});

struct PlanResult {
  TrainPlan plan;
  ScorerParams params;
  std::vector<TrainLog> logs;
};

/// Trains one plan on the workspace with the config's split and presets.
class Trainer {
 public:
  Trainer(const ExperimentConfig& config, const Workspace& ws);

  PlanResult train(const std::string& plan_name);

  const std::vector<Query>& train_split() const { return train_; }
  const std::vector<Query>& validation_split() const { return validation_; }

 private:
  const ExperimentConfig& config_;
  const Workspace& ws_;
  TrainingContext ctx_;
  FeatureCache cache_;
  std::vector<Query> train_;
  std::vector<Query> validation_;
};

/// File-system name for a plan ("C->D" becomes "C-to-D").
std::string plan_directory(const std::string& plan_name);

/// Writes params.bin, train.csv and val.csv under `dir`.
void write_plan_outputs(const PlanResult& result, const std::filesystem::path& dir);

struct ExperimentSummary {
  std::map<std::string, std::vector<MetricReport>> reports;  // by system label
  std::string report_markdown;                               // the three tables
  std::string best_single;
  std::string best_multi;
};

/// Trains every plan, re-ranks the evaluation run with each checkpoint,
/// evaluates, and writes the report under `config.out`. On failure nothing
/// new is left behind in the output directory.
ExperimentSummary run_experiment(const ExperimentConfig& config);

/// Mean of the first report whose metric name matches, or throws.
double mean_of(const std::vector<MetricReport>& reports, const std::string& metric);

}  // namespace rankforge
