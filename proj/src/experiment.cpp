// Copyright 2026 The RankForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "rankforge/experiment.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "rankforge/error.hpp"
#include "rankforge/io.hpp"
#include "rankforge/rng.hpp"

namespace rankforge {
namespace {

using nlohmann::json;

// Sub-seed slots derived from the master seed.
enum SeedSlot : std::uint64_t { kScorerSeed = 1, kStageSeed, kSamplerSeed, kSplitSeed };

std::uint64_t derive(std::uint64_t seed, SeedSlot slot) { return substream_seed(seed, {slot}); }

void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* where) {
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(known.begin(), known.end(), [&](const char* k) { return key == k; }) ==
        known.end()) {
      throw Error(ErrorKind::kInvalidArgument, fmt::format("unknown key '{}' in {}", key, where));
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInvalidArgument, fmt::format("config key '{}': {}", key, e.what()));
  }
}

void require_object(const json& j, const char* where) {
  if (!j.is_object()) {
    throw Error(ErrorKind::kInvalidArgument, fmt::format("config '{}' must be an object", where));
  }
}

std::vector<Ranking> first_stage(const std::string& source, const std::vector<Query>& queries,
                                 const InvertedIndex& index, const Bm25Params& bm25,
                                 std::size_t depth) {
  std::vector<Ranking> runs;
  runs.reserve(queries.size());
  if (source == "build") {
    for (const Query& q : queries) runs.push_back(retrieve_topk(index, bm25, q, depth));
    return runs;
  }
  auto loaded = load_run(source);
  std::unordered_map<std::string, Ranking*> by_id;
  for (Ranking& r : loaded) by_id.emplace(r.query_id, &r);
  for (const Query& q : queries) {
    auto it = by_id.find(q.id);
    runs.push_back(it == by_id.end() ? Ranking{q.id, {}} : std::move(*it->second));
  }
  return runs;
}

void publish(const std::filesystem::path& staging, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  for (const auto& entry : std::filesystem::directory_iterator(staging)) {
    const auto target = out / entry.path().filename();
    std::filesystem::remove_all(target);
    std::filesystem::rename(entry.path(), target);
  }
  std::filesystem::remove_all(staging);
}

std::string format_csv(const std::vector<MetricReport>& reports) {
  std::ostringstream s;
  write_report_csv(s, reports);
  return s.str();
}

}  // namespace

void apply_seed(ExperimentConfig& config, std::uint64_t seed) {
  config.seed = seed;
  config.synth.seed = seed;
  config.scorer.seed = derive(seed, kScorerSeed);
  config.presets.seed = derive(seed, kStageSeed);
  config.presets.sampler.seed = derive(seed, kSamplerSeed);
  config.split_seed = derive(seed, kSplitSeed);
}

ExperimentConfig default_experiment_config() {
  ExperimentConfig c;
  apply_seed(c, c.seed);
  return c;
}

ExperimentConfig parse_experiment_config(const json& j) {
  require_object(j, "root");
  reject_unknown(j,
                 {"seed", "out", "data", "synth", "bm25", "first_stage_depth", "depth", "scorer",
                  "presets", "validation_fraction", "split_seed", "positive_threshold", "plans",
                  "metrics", "query_set"},
                 "config");
  ExperimentConfig c = default_experiment_config();
  std::uint64_t seed = c.seed;
  read(j, "seed", seed);
  apply_seed(c, seed);
  std::string out = c.out.string();
  read(j, "out", out);
  c.out = out;

  if (j.contains("data")) {
    const json& d = j["data"];
    require_object(d, "data");
    reject_unknown(d, {"corpus", "queries", "eval_queries", "qrels", "teacher", "run", "train_run"},
                   "data");
    DataPaths paths;
    read(d, "corpus", paths.corpus);
    read(d, "queries", paths.queries);
    read(d, "eval_queries", paths.eval_queries);
    read(d, "qrels", paths.qrels);
    read(d, "teacher", paths.teacher);
    read(d, "run", paths.run);
    read(d, "train_run", paths.train_run);
    c.data = paths;
  }
  if (j.contains("synth")) {
    const json& s = j["synth"];
    require_object(s, "synth");
    reject_unknown(s, {"vocabulary", "topics", "docs_per_topic", "queries", "eval_queries",
                       "teacher_noise", "teacher_depth", "seed"},
                   "synth");
    read(s, "vocabulary", c.synth.vocabulary);
    read(s, "topics", c.synth.topics);
    read(s, "docs_per_topic", c.synth.docs_per_topic);
    read(s, "queries", c.synth.queries);
    read(s, "eval_queries", c.synth.eval_queries);
    read(s, "teacher_noise", c.synth.teacher_noise);
    read(s, "teacher_depth", c.synth.teacher_depth);
    read(s, "seed", c.synth.seed);
  }
  if (j.contains("bm25")) {
    const json& b = j["bm25"];
    require_object(b, "bm25");
    reject_unknown(b, {"k1", "b"}, "bm25");
    read(b, "k1", c.bm25.k1);
    read(b, "b", c.bm25.b);
  }
  read(j, "first_stage_depth", c.first_stage_depth);
  read(j, "depth", c.rerank_depth);
  if (j.contains("scorer")) {
    const json& s = j["scorer"];
    require_object(s, "scorer");
    reject_unknown(s, {"buckets", "hidden", "seed"}, "scorer");
    read(s, "buckets", c.scorer.buckets);
    read(s, "hidden", c.scorer.hidden);
    read(s, "seed", c.scorer.seed);
  }
  if (j.contains("presets")) {
    const json& p = j["presets"];
    require_object(p, "presets");
    reject_unknown(p,
                   {"base", "step_scale", "contrastive_lr", "contrastive_steps_first",
                    "contrastive_steps_second", "distill_lr_first", "distill_steps_first",
                    "distill_lr_second", "distill_steps_second", "validation_interval",
                    "negatives", "pool_depth", "seed", "sampler_seed"},
                   "presets");
    std::string base = "desk";
    read(p, "base", base);
    if (base == "full") {
      PlanPresets full;
      full.seed = c.presets.seed;
      full.sampler.seed = c.presets.sampler.seed;
      c.presets = full;
    } else if (base != "desk") {
      throw Error(ErrorKind::kInvalidArgument,
                  fmt::format("presets.base must be 'desk' or 'full', got '{}'", base));
    }
    read(p, "contrastive_lr", c.presets.contrastive_lr);
    read(p, "contrastive_steps_first", c.presets.contrastive_steps_first);
    read(p, "contrastive_steps_second", c.presets.contrastive_steps_second);
    read(p, "distill_lr_first", c.presets.distill_lr_first);
    read(p, "distill_steps_first", c.presets.distill_steps_first);
    read(p, "distill_lr_second", c.presets.distill_lr_second);
    read(p, "distill_steps_second", c.presets.distill_steps_second);
    read(p, "validation_interval", c.presets.validation_interval);
    read(p, "negatives", c.presets.sampler.negatives);
    read(p, "pool_depth", c.presets.sampler.pool_depth);
    read(p, "seed", c.presets.seed);
    read(p, "sampler_seed", c.presets.sampler.seed);
    double scale = 1.0;
    read(p, "step_scale", scale);
    if (!(scale > 0.0)) {
      throw Error(ErrorKind::kInvalidArgument, "presets.step_scale must be > 0");
    }
    if (scale != 1.0) {
      auto scaled = [&](std::size_t steps) {
        return std::max<std::size_t>(1, static_cast<std::size_t>(
                                            std::llround(static_cast<double>(steps) * scale)));
      };
      c.presets.contrastive_steps_first = scaled(c.presets.contrastive_steps_first);
      c.presets.contrastive_steps_second = scaled(c.presets.contrastive_steps_second);
      c.presets.distill_steps_first = scaled(c.presets.distill_steps_first);
      c.presets.distill_steps_second = scaled(c.presets.distill_steps_second);
    }
  }
  read(j, "validation_fraction", c.validation_fraction);
  read(j, "split_seed", c.split_seed);
  read(j, "positive_threshold", c.positive_threshold);
  read(j, "plans", c.plans);
  if (j.contains("metrics")) {
    std::vector<std::string> names;
    read(j, "metrics", names);
    c.metrics.clear();
    for (const auto& n : names) c.metrics.push_back(parse_metric_spec(n));
  }
  read(j, "query_set", c.query_set);
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, fmt::format("cannot open config '{}'", path.string()));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(0, fmt::format("{}: {}", path.string(), e.what()));
  }
  return parse_experiment_config(j);
}

void validate(const ExperimentConfig& config) {
  std::set<std::string> seen;
  for (const auto& name : config.plans) {
    make_plan(name, config.presets);  // throws on unknown names
    if (!seen.insert(canonical_plan_name(name)).second) {
      throw Error(ErrorKind::kInvalidArgument, fmt::format("plan '{}' listed twice", name));
    }
  }
  for (const auto& name : config.plans) {
    for (const auto& stage : make_plan(name, config.presets).stages) validate(stage);
  }
  validate(config.bm25);
  if (config.first_stage_depth < 1 || config.rerank_depth < 1) {
    throw Error(ErrorKind::kInvalidArgument, "retrieval and re-rank depths must be >= 1");
  }
  if (config.scorer.buckets < 1 || config.scorer.hidden < 1) {
    throw Error(ErrorKind::kInvalidArgument, "scorer needs buckets >= 1 and hidden >= 1");
  }
  if (!(config.validation_fraction >= 0.0 && config.validation_fraction < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "validation_fraction must be in [0, 1)");
  }
  if (config.metrics.empty()) throw Error(ErrorKind::kInvalidArgument, "no metrics configured");
  if (config.data) {
    const DataPaths& d = *config.data;
    auto require = [](const std::string& p, const char* what) {
      if (p.empty()) {
        throw Error(ErrorKind::kInvalidArgument, fmt::format("data.{} is required", what));
      }
      if (!std::filesystem::exists(p)) {
        throw Error(ErrorKind::kIo, fmt::format("data.{} '{}' does not exist", what, p));
      }
    };
    require(d.corpus, "corpus");
    require(d.queries, "queries");
    require(d.eval_queries, "eval_queries");
    require(d.qrels, "qrels");
    if (d.run != "build") require(d.run, "run");
    if (!d.train_run.empty() && d.train_run != "build") require(d.train_run, "train_run");
    if (!d.teacher.empty()) require(d.teacher, "teacher");
  } else {
    validate(config.synth);
  }
}

Workspace prepare_workspace(const ExperimentConfig& config, const std::filesystem::path& data_dir) {
  Workspace ws;
  std::string run_source = "build";
  std::string train_source = "build";
  if (config.data) {
    const DataPaths& d = *config.data;
    ws.corpus = load_corpus(d.corpus);
    ws.train_queries = load_queries(d.queries);
    ws.eval_queries = load_queries(d.eval_queries);
    ws.qrels = load_qrels(d.qrels);
    if (!d.teacher.empty()) ws.teacher = load_teacher(d.teacher);
    run_source = d.run;
    train_source = d.train_run.empty() ? d.run : d.train_run;
  } else {
    SynthData data = generate_synthetic(config.synth);
    if (!data_dir.empty()) write_synthetic(data, data_dir);
    ws.corpus = std::move(data.corpus);
    ws.train_queries = std::move(data.train_queries);
    ws.eval_queries = std::move(data.eval_queries);
    ws.qrels = std::move(data.qrels);
    ws.teacher = std::move(data.teacher);
  }
  ws.index = InvertedIndex::build(ws.corpus);
  ws.eval_runs = first_stage(run_source, ws.eval_queries, ws.index, config.bm25,
                             config.first_stage_depth);
  ws.train_runs = first_stage(train_source, ws.train_queries, ws.index, config.bm25,
                              std::max(config.first_stage_depth, config.presets.sampler.pool_depth));
  return ws;
}

Trainer::Trainer(const ExperimentConfig& config, const Workspace& ws)
    : config_(config), ws_(ws), cache_(ctx_) {
  ctx_.corpus = &ws.corpus;
  ctx_.index = &ws.index;
  ctx_.bm25 = config.bm25;
  ctx_.buckets = config.scorer.buckets;
  ctx_.qrels = &ws.qrels;
  ctx_.positive_threshold = config.positive_threshold;
  for (const Ranking& r : ws.train_runs) ctx_.rankings.emplace(r.query_id, r);
  for (const TeacherRanking& t : ws.teacher) ctx_.teacher.emplace(t.query_id, t);
  if (config.validation_fraction > 0.0) {
    std::tie(train_, validation_) =
        split_train_val(ws.train_queries, config.validation_fraction, config.split_seed);
  } else {
    train_ = ws.train_queries;
  }

  // Warm the cache with every pair a stage can touch, except random negatives.
  std::vector<std::pair<const Query*, std::string>> pairs;
  const std::size_t pool = config.presets.sampler.pool_depth;
  auto add_query = [&](const Query& q) {
    if (auto it = ctx_.rankings.find(q.id); it != ctx_.rankings.end()) {
      const auto& entries = it->second.entries;
      for (std::size_t i = 0; i < std::min(pool, entries.size()); ++i) {
        pairs.emplace_back(&q, entries[i].doc_id);
      }
    }
    for (const auto& d : positives_for(ws.qrels, q.id, config.positive_threshold)) {
      if (ws.corpus.find(d) != nullptr) pairs.emplace_back(&q, d);
    }
    if (auto it = ctx_.teacher.find(q.id); it != ctx_.teacher.end() && it->second.texts.empty()) {
      for (const auto& d : it->second.doc_ids) {
        if (ws.corpus.find(d) != nullptr) pairs.emplace_back(&q, d);
      }
    }
  };
  for (const Query& q : train_) add_query(q);
  for (const Query& q : validation_) add_query(q);
  cache_.prefetch(pairs);
}

PlanResult Trainer::train(const std::string& plan_name) {
  TrainPlan plan = make_plan(plan_name, config_.presets);
  auto [params, logs] = run_plan(config_.scorer, plan, train_, validation_, ctx_, cache_);
  return PlanResult{std::move(plan), std::move(params), std::move(logs)};
}

std::string plan_directory(const std::string& plan_name) {
  std::string name = canonical_plan_name(plan_name);
  std::string out;
  for (std::size_t i = 0; i < name.size(); ++i) {
    if (name.compare(i, 2, "->") == 0) {
      out += "-to-";
      ++i;
    } else {
      out.push_back(name[i]);
    }
  }
  return out;
}

void write_plan_outputs(const PlanResult& result, const std::filesystem::path& dir) {
  write_text_file(dir / "params.bin", serialize_params(result.params));
  std::ostringstream train, val;
  write_train_csv(train, result.logs);
  write_validation_csv(val, result.logs);
  write_text_file(dir / "train.csv", train.str());
  write_text_file(dir / "val.csv", val.str());
}

double mean_of(const std::vector<MetricReport>& reports, const std::string& metric) {
  for (const auto& r : reports) {
    if (r.metric == metric) return r.mean;
  }
  throw Error(ErrorKind::kNotFound, fmt::format("metric '{}' was not evaluated", metric));
}

ExperimentSummary run_experiment(const ExperimentConfig& config) {
  validate(config);
  for (const char* required : {"C", "D", "C->D", "D->C"}) {
    if (std::none_of(config.plans.begin(), config.plans.end(), [&](const std::string& p) {
          return canonical_plan_name(p) == required;
        })) {
      throw Error(ErrorKind::kInvalidArgument,
                  fmt::format("experiment needs plan '{}' for its comparison tables", required));
    }
  }
  const std::string headline = MetricSpec::ndcg(10).name();
  std::vector<MetricSpec> metrics = config.metrics;
  if (std::none_of(metrics.begin(), metrics.end(),
                   [&](const MetricSpec& m) { return m.name() == headline; })) {
    metrics.push_back(MetricSpec::ndcg(10));
  }

  const auto staging = config.out / ".partial";
  const bool out_existed = std::filesystem::exists(config.out);
  std::filesystem::remove_all(staging);
  std::filesystem::create_directories(staging);
  try {
    Workspace ws = prepare_workspace(config, config.data ? std::filesystem::path{} : staging / "data");
    write_text_file(staging / "first_stage.run", format_run(ws.eval_runs, "bm25"));

    ExperimentSummary summary;
    const std::string baseline_label = config.data && config.data->run != "build" ? "first-stage" : "BM25";
    summary.reports[baseline_label] = evaluate_run(ws.eval_runs, ws.qrels, metrics);

    auto rerank_and_eval = [&](const ScorerParams& params, const std::filesystem::path& dir,
                               const std::string& label) {
      auto reranked = rerank_all(ws.eval_queries, ws.eval_runs, params, ws.corpus, ws.index,
                                 config.bm25, config.rerank_depth);
      write_text_file(dir / "run.txt", format_run(reranked, label));
      auto reports = evaluate_run(reranked, ws.qrels, metrics);
      write_text_file(dir / "metrics.csv", format_csv(reports));
      summary.reports[label] = std::move(reports);
    };
    rerank_and_eval(init_params(config.scorer), staging / "untrained", "untrained");

    Trainer trainer(config, ws);
    for (const auto& name : config.plans) {
      const std::string label = canonical_plan_name(name);
      const auto dir = staging / plan_directory(name);
      PlanResult result = trainer.train(name);
      double seconds = 0.0;
      for (const auto& log : result.logs) seconds += log.seconds;
      std::cerr << fmt::format("trained {} in {:.2f}s\n", label, seconds);
      write_plan_outputs(result, dir);
      rerank_and_eval(result.params, dir, label);
    }

    std::vector<TableColumn> columns;
    for (const auto& m : metrics) columns.push_back({config.query_set, m});
    auto system = [&](const std::string& label) {
      return SystemReports{label, summary.reports.at(label)};
    };
    const SystemReports baseline = system(baseline_label);
    auto pick_best = [&](const std::string& a, const std::string& b) {
      return mean_of(summary.reports.at(b), headline) > mean_of(summary.reports.at(a), headline) ? b : a;
    };
    summary.best_single = pick_best("C", "D");
    summary.best_multi = pick_best("C->D", "D->C");

    std::string md = "# Re-ranking effectiveness\n\n";
    md += fmt::format(
        "Baseline: {} first-stage run. `*` significant difference between the two "
        "fine-tuned systems, `†` significant difference w.r.t. the baseline "
        "(two-tailed paired t-test, p < {}), `↓` below the baseline, bold marks the "
        "better of the two.\n\n",
        baseline_label, kSignificanceLevel);
    md += render_markdown(build_table("Single-stage fine-tuning (C vs D)", columns, baseline,
                                      {system("C"), system("D")}, {{0, 1}}));
    md += "\n";
    md += render_markdown(build_table("Multi-stage fine-tuning (C->D vs D->C)", columns,
                                      baseline, {system("C->D"), system("D->C")}, {{0, 1}}));
    md += "\n";
    md += render_markdown(build_table(
        fmt::format("Best single-stage ({}) vs best multi-stage ({})", summary.best_single,
                    summary.best_multi),
        columns, baseline, {system(summary.best_single), system(summary.best_multi)}, {{0, 1}}));
    summary.report_markdown = md;
    write_text_file(staging / "report.md", md);

    json j;
    j["best_single"] = summary.best_single;
    j["best_multi"] = summary.best_multi;
    for (const auto& [label, reports] : summary.reports) {
      for (const auto& r : reports) j["systems"][label][r.metric] = r.mean;
    }
    write_text_file(staging / "summary.json", j.dump(2) + "\n");
    publish(staging, config.out);
    return summary;
  } catch (...) {
    std::error_code ignored;
    std::filesystem::remove_all(staging, ignored);
    if (!out_existed) std::filesystem::remove_all(config.out, ignored);
    throw;
  }
}

}  // namespace rankforge
