// Copyright 2026 The RankForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rankforge/retrieval.hpp"
#include "rankforge/sampling.hpp"
#include "rankforge/scorer.hpp"
#include "rankforge/types.hpp"

namespace rankforge {

enum class LossKind { kLce, kRankNet, kBce };

std::string_view to_string(LossKind kind);
/// Accepts "lce", "ranknet", "bce" (case-insensitive).
LossKind parse_loss_kind(std::string_view name);

struct StageConfig {
  LossKind loss = LossKind::kLce;
  double learning_rate = 1e-5;
  std::size_t max_steps = 1;
  std::size_t validation_interval = 500;
  SamplerConfig sampler;  // LCE and BCE only
  std::uint64_t seed = 0;
};

void validate(const StageConfig& stage);

struct TrainPlan {
  std::string name;
  std::vector<StageConfig> stages;
};

struct AdamWHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
};

struct OptimizerState {
  explicit OptimizerState(std::size_t param_count, AdamWHyper hyper = {})
      : m(param_count, 0.0), v(param_count, 0.0), hyper(hyper) {}

  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
  AdamWHyper hyper;
};

/// One AdamW update with decoupled weight decay:
///   w <- w - lr * (m_hat / (sqrt(v_hat) + eps) + lambda * w).
/// With lr == 0 the parameters are left untouched while the moments and the
/// step counter still advance. Throws kNumeric on a non-finite gradient.
void adamw_step(ScorerParams& params, const ScorerParams& grads, OptimizerState& state,
                double learning_rate);

struct LogPoint {
  std::size_t step = 0;  // optimizer steps completed when recorded
  double loss = 0.0;
};

struct TrainLog {
  std::vector<LogPoint> train;
  std::vector<LogPoint> validation;
  double seconds = 0.0;
};

/// Training data shared by every stage. Rankings and teacher lists are
/// keyed by query id; `positive_threshold` selects LCE/BCE positives from
/// the qrels (the highest-graded documents at or above it).
struct TrainingContext {
  const Corpus* corpus = nullptr;
  const InvertedIndex* index = nullptr;
  Bm25Params bm25;
  std::size_t buckets = 1024;
  const Qrels* qrels = nullptr;
  std::unordered_map<std::string, Ranking> rankings;
  std::unordered_map<std::string, TeacherRanking> teacher;
  int positive_threshold = 1;
};

/// Memoized sparse features keyed by (query, document). Lookups that miss
/// compute and insert under a lock, so a cache may be shared by threads.
class FeatureCache {
 public:
  explicit FeatureCache(const TrainingContext& ctx) : ctx_(&ctx) {}

  const SparseFeatures& get(const Query& query, const std::string& doc_id,
                            const std::string* text = nullptr);
  /// Computes every listed pair in parallel.
  void prefetch(const std::vector<std::pair<const Query*, std::string>>& pairs);

  std::size_t size() const { return entries_.size(); }

 private:
  SparseFeatures compute(const Query& query, const std::string& doc_id,
                         const std::string* text) const;

  const TrainingContext* ctx_;
  std::unordered_map<std::string, SparseFeatures> entries_;
  std::mutex mutex_;
};

/// Best-graded judged documents for a query (grade >= threshold), sorted.
std::vector<std::string> positives_for(const Qrels& qrels, const std::string& query_id,
                                       int threshold);

/// Exactly `stage.max_steps` AdamW steps with a fresh optimizer, one query
/// group per step, visiting `train` in a per-epoch shuffled order.
std::pair<ScorerParams, TrainLog> run_stage(ScorerParams params, const StageConfig& stage,
                                            const std::vector<Query>& train,
                                            const std::vector<Query>& validation,
                                            const TrainingContext& ctx, FeatureCache& cache);

/// Fresh init_params(config), then each stage in order; parameters carry
/// across stage boundaries, optimizer state does not.
std::pair<ScorerParams, std::vector<TrainLog>> run_plan(const ScorerConfig& config,
                                                        const TrainPlan& plan,
                                                        const std::vector<Query>& train,
                                                        const std::vector<Query>& validation,
                                                        const TrainingContext& ctx,
                                                        FeatureCache& cache);

/// Seeded partition into (train, validation); validation gets
/// round(fraction * n) queries. Both sides keep input order.
std::pair<std::vector<Query>, std::vector<Query>> split_train_val(
    const std::vector<Query>& queries, double fraction, std::uint64_t seed);

/// Step budgets and learning rates for the named plans. Defaults are the
/// full-scale values; desk_scale() gives the synthetic-benchmark values.
struct PlanPresets {
  double contrastive_lr = 1e-5;
  std::size_t contrastive_steps_first = 25000;
  std::size_t contrastive_steps_second = 31000;
  double distill_lr_first = 1e-5;
  std::size_t distill_steps_first = 2000;
  double distill_lr_second = 1e-8;
  std::size_t distill_steps_second = 1000;
  std::size_t validation_interval = 500;
  SamplerConfig sampler;
  std::uint64_t seed = 0;

  static PlanPresets desk_scale();
};

/// "C", "D", "C->D" (or "C→D"), "D->C" (or "D→C"), plus "NCE" (random
/// negatives) and "BCE". Throws kInvalidArgument for other names.
TrainPlan make_plan(std::string_view name, const PlanPresets& presets);

/// Canonical ASCII form of a plan name ("C→D" becomes "C->D").
std::string canonical_plan_name(std::string_view name);

/// CSV `step,loss` over all stages, with steps counted across stages.
void write_train_csv(std::ostream& out, const std::vector<TrainLog>& logs);
/// CSV `step,val_loss`, same step numbering.
void write_validation_csv(std::ostream& out, const std::vector<TrainLog>& logs);

}  // namespace rankforge
