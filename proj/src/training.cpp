// Copyright 2026 The RankForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "rankforge/training.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

#include "rankforge/error.hpp"
#include "rankforge/losses.hpp"
#include "rankforge/parallel.hpp"
#include "rankforge/rng.hpp"

namespace rankforge {
namespace {

constexpr std::uint64_t kShuffleStream = 0x73687566;   // "shuf"
constexpr std::uint64_t kPositiveStream = 0x706f7369;  // "posi"
// Validation groups are drawn once, from an epoch no training pass reaches.
constexpr std::uint64_t kValidationEpoch = ~std::uint64_t{0};

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// One query group, ready for a forward/backward pass.
struct Group {
  std::vector<const SparseFeatures*> features;
  std::vector<int> labels;  // BCE only
};

class StageRunner {
 public:
  StageRunner(const StageConfig& stage, const TrainingContext& ctx, FeatureCache& cache)
      : stage_(stage), ctx_(ctx), cache_(cache) {}

  Group build(const Query& q, std::uint64_t ordinal, std::uint64_t epoch) {
    Group g;
    if (stage_.loss == LossKind::kRankNet) {
      auto it = ctx_.teacher.find(q.id);
      if (it == ctx_.teacher.end()) {
        throw Error(ErrorKind::kNotFound,
                    fmt::format("query '{}' has no teacher ranking", q.id));
      }
      const TeacherRanking& t = it->second;
      for (std::size_t i = 0; i < t.doc_ids.size(); ++i) {
        const std::string* text = t.texts.empty() ? nullptr : &t.texts[i];
        g.features.push_back(&cache_.get(q, t.doc_ids[i], text));
      }
      return g;
    }
    const auto positives = positives_for(*ctx_.qrels, q.id, ctx_.positive_threshold);
    if (positives.empty()) {
      throw Error(ErrorKind::kNotFound, fmt::format("query '{}' has no positive document", q.id));
    }
    SplitMix64 pick(substream_seed(stage_.seed, {kPositiveStream, epoch, ordinal}));
    const std::string& positive = positives[pick.below(positives.size())];
    ContrastiveInstance inst;
    if (stage_.sampler.policy == NegativePolicy::kHard) {
      auto it = ctx_.rankings.find(q.id);
      if (it == ctx_.rankings.end()) {
        throw Error(ErrorKind::kNotFound,
                    fmt::format("query '{}' has no first-stage ranking", q.id));
      }
      inst = sample_hard(it->second, positive, stage_.sampler, ordinal, epoch);
    } else {
      inst = sample_random(*ctx_.corpus, q.id, positive, stage_.sampler, ordinal, epoch);
    }
    g.features.push_back(&cache_.get(q, inst.positive_id));
    g.labels.push_back(1);
    for (const auto& d : inst.negatives) {
      g.features.push_back(&cache_.get(q, d));
      g.labels.push_back(0);
    }
    return g;
  }

  // Loss of the group; when `grad` is given, accumulates dL/dparams into it.
  double evaluate(const ScorerParams& params, const Group& g, ScorerParams* grad) {
    scores_.resize(g.features.size());
    for (std::size_t i = 0; i < g.features.size(); ++i) scores_[i] = score(params, *g.features[i]);
    double value = 0.0;
    upstream_.assign(scores_.size(), 0.0);
    switch (stage_.loss) {
      case LossKind::kLce: {
        auto out = lce(scores_);
        value = out.value;
        upstream_ = std::move(out.grad);
        break;
      }
      case LossKind::kRankNet: {
        auto out = ranknet(scores_);
        value = out.value;
        upstream_ = std::move(out.grad);
        break;
      }
      case LossKind::kBce:
        for (std::size_t i = 0; i < scores_.size(); ++i) {
          auto out = bce(scores_[i], g.labels[i]);
          value += out.value;
          upstream_[i] = out.grad[0];
        }
        break;
    }
    if (grad != nullptr) {
      for (std::size_t i = 0; i < g.features.size(); ++i) {
        accumulate_backward(params, *g.features[i], upstream_[i], *grad);
      }
    }
    return value;
  }

 private:
  const StageConfig& stage_;
  const TrainingContext& ctx_;
  FeatureCache& cache_;
  std::vector<double> scores_;
  std::vector<double> upstream_;
};

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(substream_seed(seed, {kShuffleStream, epoch}));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

}  // namespace

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kLce:
      return "lce";
    case LossKind::kRankNet:
      return "ranknet";
    case LossKind::kBce:
      return "bce";
  }
  return "unknown";
}

LossKind parse_loss_kind(std::string_view name) {
  const auto n = lower(name);
  if (n == "lce") return LossKind::kLce;
  if (n == "ranknet") return LossKind::kRankNet;
  if (n == "bce") return LossKind::kBce;
  throw Error(ErrorKind::kInvalidArgument, fmt::format("unknown loss '{}'", name));
}

void validate(const StageConfig& stage) {
  if (!(stage.learning_rate >= 0.0) || !std::isfinite(stage.learning_rate)) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("learning rate must be finite and >= 0, got {}", stage.learning_rate));
  }
  if (stage.max_steps < 1) throw Error(ErrorKind::kInvalidArgument, "max steps must be >= 1");
  if (stage.validation_interval < 1) {
    throw Error(ErrorKind::kInvalidArgument, "validation interval must be >= 1");
  }
  if (stage.loss != LossKind::kRankNet) {
    if (stage.sampler.policy == NegativePolicy::kHard) {
      validate(stage.sampler);
    } else if (stage.sampler.negatives < 1) {
      throw Error(ErrorKind::kInvalidArgument, "sampler needs at least one negative");
    }
  }
}

void adamw_step(ScorerParams& params, const ScorerParams& grads, OptimizerState& state,
                double learning_rate) {
  if (!params.same_shape(grads) || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw Error(ErrorKind::kMismatch, "optimizer state, gradient and parameter shapes differ");
  }
  if (!(learning_rate >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "learning rate must be >= 0");
  }
  const auto g = grads.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) {
      throw Error(ErrorKind::kNumeric, fmt::format("non-finite gradient at parameter {}", i));
    }
  }
  const AdamWHyper& h = state.hyper;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(h.beta1, t);
  const double correction2 = 1.0 - std::pow(h.beta2, t);
  auto w = params.values();
  const bool frozen = learning_rate == 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    state.m[i] = h.beta1 * state.m[i] + (1.0 - h.beta1) * g[i];
    state.v[i] = h.beta2 * state.v[i] + (1.0 - h.beta2) * g[i] * g[i];
    if (frozen) continue;
    const double m_hat = state.m[i] / correction1;
    const double v_hat = state.v[i] / correction2;
    w[i] -= learning_rate * (m_hat / (std::sqrt(v_hat) + h.epsilon) + h.weight_decay * w[i]);
  }
}

const SparseFeatures& FeatureCache::get(const Query& query, const std::string& doc_id,
                                        const std::string* text) {
  std::string key = query.id;
  key.push_back('\x1f');
  key += doc_id;
  {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key);
    if (it != entries_.end()) return it->second;
  }
  SparseFeatures x = compute(query, doc_id, text);
  std::lock_guard lock(mutex_);
  return entries_.emplace(std::move(key), std::move(x)).first->second;
}

void FeatureCache::prefetch(const std::vector<std::pair<const Query*, std::string>>& pairs) {
  parallel_for(pairs.size(), [&](std::size_t i) { get(*pairs[i].first, pairs[i].second); });
}

SparseFeatures FeatureCache::compute(const Query& query, const std::string& doc_id,
                                     const std::string* text) const {
  const Document* doc = ctx_->corpus->find(doc_id);
  if (doc == nullptr && text == nullptr) {
    throw Error(ErrorKind::kNotFound,
                fmt::format("document '{}' (query '{}') has no text", doc_id, query.id));
  }
  const Document fallback{doc_id, text != nullptr ? *text : std::string()};
  const Document& d = doc != nullptr ? *doc : fallback;
  return SparseFeatures::from_dense(
      extract_features(*ctx_->index, ctx_->bm25, query, d, ctx_->buckets));
}

std::vector<std::string> positives_for(const Qrels& qrels, const std::string& query_id,
                                       int threshold) {
  int best = threshold;
  for (const auto& [doc, grade] : qrels.judgments(query_id)) best = std::max(best, grade);
  return qrels.relevant(query_id, best);
}

std::pair<ScorerParams, TrainLog> run_stage(ScorerParams params, const StageConfig& stage,
                                            const std::vector<Query>& train,
                                            const std::vector<Query>& validation,
                                            const TrainingContext& ctx, FeatureCache& cache) {
  validate(stage);
  if (train.empty()) throw Error(ErrorKind::kInvalidArgument, "training set is empty");
  if (ctx.corpus == nullptr || ctx.index == nullptr ||
      (stage.loss != LossKind::kRankNet && ctx.qrels == nullptr)) {
    throw Error(ErrorKind::kInvalidArgument, "training context is incomplete");
  }
  const auto start = std::chrono::steady_clock::now();
  StageRunner runner(stage, ctx, cache);

  // Validation groups are fixed for the whole stage.
  std::vector<Group> val_groups;
  val_groups.reserve(validation.size());
  for (std::size_t i = 0; i < validation.size(); ++i) {
    val_groups.push_back(runner.build(validation[i], i, kValidationEpoch));
  }
  auto validate_now = [&](std::size_t step, TrainLog& log) {
    if (val_groups.empty()) return;
    double total = 0.0;
    for (const Group& g : val_groups) total += runner.evaluate(params, g, nullptr);
    log.validation.push_back({step, total / static_cast<double>(val_groups.size())});
  };

  TrainLog log;
  log.train.reserve(stage.max_steps);
  OptimizerState state(params.size());
  ScorerParams grad(params.buckets(), params.hidden());
  std::vector<std::size_t> order;
  std::uint64_t current_epoch = ~std::uint64_t{0};
  for (std::size_t step = 0; step < stage.max_steps; ++step) {
    const std::uint64_t epoch = step / train.size();
    if (epoch != current_epoch) {
      order = epoch_order(train.size(), stage.seed, epoch);
      current_epoch = epoch;
    }
    const std::size_t ordinal = order[step % train.size()];
    const Group g = runner.build(train[ordinal], ordinal, epoch);
    grad.set_zero();
    const double loss = runner.evaluate(params, g, &grad);
    adamw_step(params, grad, state, stage.learning_rate);
    log.train.push_back({step + 1, loss});
    if ((step + 1) % stage.validation_interval == 0 || step + 1 == stage.max_steps) {
      validate_now(step + 1, log);
    }
  }
  log.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(params), std::move(log)};
}

std::pair<ScorerParams, std::vector<TrainLog>> run_plan(const ScorerConfig& config,
                                                        const TrainPlan& plan,
                                                        const std::vector<Query>& train,
                                                        const std::vector<Query>& validation,
                                                        const TrainingContext& ctx,
                                                        FeatureCache& cache) {
  if (plan.stages.empty()) {
    throw Error(ErrorKind::kInvalidArgument, fmt::format("plan '{}' has no stages", plan.name));
  }
  ScorerParams params = init_params(config);
  std::vector<TrainLog> logs;
  for (const StageConfig& stage : plan.stages) {
    auto [next, log] = run_stage(std::move(params), stage, train, validation, ctx, cache);
    params = std::move(next);
    logs.push_back(std::move(log));
  }
  return {std::move(params), std::move(logs)};
}

std::pair<std::vector<Query>, std::vector<Query>> split_train_val(
    const std::vector<Query>& queries, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("validation fraction must be in (0, 1), got {}", fraction));
  }
  const auto n = queries.size();
  const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (n_val == 0 || n_val >= n) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("{} queries cannot be split with validation fraction {}", n, fraction));
  }
  const auto picks = sample_indices(n, n_val, seed);
  std::vector<Query> train, val;
  train.reserve(n - n_val);
  val.reserve(n_val);
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (next < picks.size() && picks[next] == i) {
      val.push_back(queries[i]);
      ++next;
    } else {
      train.push_back(queries[i]);
    }
  }
  return {std::move(train), std::move(val)};
}

PlanPresets PlanPresets::desk_scale() {
  PlanPresets p;
  p.contrastive_lr = 1e-3;
  p.contrastive_steps_first = 2000;
  // Keeps the 31:25 ratio between second- and first-stage contrastive budgets.
  p.contrastive_steps_second = 2480;
  p.distill_lr_first = 1e-3;
  p.distill_steps_first = 2000;
  // Same 1000x reduction from first- to second-stage distillation rate.
  p.distill_lr_second = 1e-6;
  p.distill_steps_second = 1000;
  p.sampler.negatives = 20;
  p.sampler.pool_depth = 50;
  return p;
}

std::string canonical_plan_name(std::string_view name) {
  std::string out;
  for (std::size_t i = 0; i < name.size();) {
    // U+2192 RIGHTWARDS ARROW is E2 86 92 in UTF-8.
    if (name.substr(i, 3) == "\xE2\x86\x92") {
      out += "->";
      i += 3;
    } else {
      out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(name[i]))));
      ++i;
    }
  }
  return out;
}

TrainPlan make_plan(std::string_view name, const PlanPresets& p) {
  auto contrastive = [&](bool first, NegativePolicy policy, LossKind loss) {
    StageConfig s;
    s.loss = loss;
    s.learning_rate = p.contrastive_lr;
    s.max_steps = first ? p.contrastive_steps_first : p.contrastive_steps_second;
    s.validation_interval = p.validation_interval;
    s.sampler = p.sampler;
    s.sampler.policy = policy;
    s.seed = p.seed;
    return s;
  };
  auto distill = [&](bool first) {
    StageConfig s;
    s.loss = LossKind::kRankNet;
    s.learning_rate = first ? p.distill_lr_first : p.distill_lr_second;
    s.max_steps = first ? p.distill_steps_first : p.distill_steps_second;
    s.validation_interval = p.validation_interval;
    s.seed = p.seed;
    return s;
  };
  const std::string canonical = canonical_plan_name(name);
  TrainPlan plan{canonical, {}};
  if (canonical == "C") {
    plan.stages = {contrastive(true, NegativePolicy::kHard, LossKind::kLce)};
  } else if (canonical == "D") {
    plan.stages = {distill(true)};
  } else if (canonical == "C->D") {
    plan.stages = {contrastive(true, NegativePolicy::kHard, LossKind::kLce), distill(false)};
  } else if (canonical == "D->C") {
    plan.stages = {distill(true), contrastive(false, NegativePolicy::kHard, LossKind::kLce)};
  } else if (canonical == "NCE") {
    plan.stages = {contrastive(true, NegativePolicy::kRandom, LossKind::kLce)};
  } else if (canonical == "BCE") {
    plan.stages = {contrastive(true, NegativePolicy::kHard, LossKind::kBce)};
  } else {
    throw Error(ErrorKind::kInvalidArgument, fmt::format("unknown plan '{}'", name));
  }
  return plan;
}

void write_train_csv(std::ostream& out, const std::vector<TrainLog>& logs) {
  out << "step,loss\n";
  std::size_t offset = 0;
  for (const TrainLog& log : logs) {
    for (const LogPoint& p : log.train) out << fmt::format("{},{:.9g}\n", offset + p.step, p.loss);
    if (!log.train.empty()) offset += log.train.back().step;
  }
}

void write_validation_csv(std::ostream& out, const std::vector<TrainLog>& logs) {
  out << "step,val_loss\n";
  std::size_t offset = 0;
  for (const TrainLog& log : logs) {
    for (const LogPoint& p : log.validation) {
      out << fmt::format("{},{:.9g}\n", offset + p.step, p.loss);
    }
    if (!log.train.empty()) offset += log.train.back().step;
  }
}

}  // namespace rankforge
