// Copyright 2026 The RankForge Authors
// SPDX-License-Identifier: Apache-2.0

// A small synthetic benchmark wired into a TrainingContext.

#pragma once

#include <memory>

#include "rankforge/retrieval.hpp"
#include "rankforge/synth.hpp"
#include "rankforge/training.hpp"

namespace fixture {

inline rankforge::SynthSpec small_spec(std::uint64_t seed = 42) {
  rankforge::SynthSpec s;
  s.vocabulary = 400;
  s.topics = 4;
  s.docs_per_topic = 40;
  s.queries = 40;
  s.eval_queries = 10;
  s.teacher_noise = 0.0;
  s.seed = seed;
  return s;
}

struct Bench {
  rankforge::SynthData data;
  rankforge::InvertedIndex index;
  rankforge::TrainingContext ctx;
  std::unique_ptr<rankforge::FeatureCache> cache;

  explicit Bench(const rankforge::SynthSpec& spec = small_spec(), std::size_t buckets = 64)
      : data(rankforge::generate_synthetic(spec)),
        index(rankforge::InvertedIndex::build(data.corpus)) {
    ctx.corpus = &data.corpus;
    ctx.index = &index;
    ctx.buckets = buckets;
    ctx.qrels = &data.qrels;
    for (const auto& q : data.train_queries) {
      ctx.rankings.emplace(q.id, rankforge::retrieve_topk(index, ctx.bm25, q, 50));
    }
    for (const auto& t : data.teacher) ctx.teacher.emplace(t.query_id, t);
    cache = std::make_unique<rankforge::FeatureCache>(ctx);
  }

  rankforge::ScorerConfig scorer(std::uint64_t seed = 1) const { return {ctx.buckets, 8, seed}; }
};

inline rankforge::StageConfig lce_stage(double lr, std::size_t steps, std::uint64_t seed = 3) {
  rankforge::StageConfig s;
  s.loss = rankforge::LossKind::kLce;
  s.learning_rate = lr;
  s.max_steps = steps;
  s.validation_interval = 100;
  s.sampler = {5, 20, rankforge::NegativePolicy::kHard, 17};
  s.seed = seed;
  return s;
}

inline rankforge::StageConfig ranknet_stage(double lr, std::size_t steps, std::uint64_t seed = 3) {
  rankforge::StageConfig s;
  s.loss = rankforge::LossKind::kRankNet;
  s.learning_rate = lr;
  s.max_steps = steps;
  s.validation_interval = 100;
  s.seed = seed;
  return s;
}

}  // namespace fixture
