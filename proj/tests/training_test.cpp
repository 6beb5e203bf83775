// Copyright 2026 The RankForge Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "rankforge/error.hpp"
#include "rankforge/training.hpp"

using namespace rankforge;

namespace {

std::vector<double> flat(const ScorerParams& p) { return {p.values().begin(), p.values().end()}; }

double mean_of(const std::vector<LogPoint>& pts, std::size_t from, std::size_t to) {
  double s = 0.0;
  for (std::size_t i = from; i < to; ++i) s += pts[i].loss;
  return s / static_cast<double>(to - from);
}

}  // namespace

TEST_CASE("adamw with zero learning rate freezes parameters") {
  SplitMix64 rng(1);
  ScorerParams p = oracle::random_params(rng, 4, 3);
  const ScorerParams before = p;
  const ScorerParams g = oracle::random_params(rng, 4, 3);
  OptimizerState state(p.size());
  adamw_step(p, g, state, 0.0);
  CHECK(p == before);
  CHECK(state.step == 1);
  CHECK(state.m[0] == doctest::Approx(0.1 * g.values()[0]));
}

TEST_CASE("first adamw step moves by lr against the gradient sign") {
  ScorerParams p(1, 1);
  ScorerParams g(1, 1);
  for (double& v : g.values()) v = -3.7;
  OptimizerState state(p.size(), AdamWHyper{0.9, 0.999, 1e-8, 0.0});
  const double lr = 1e-3;
  adamw_step(p, g, state, lr);
  for (double v : p.values()) CHECK(std::abs(v - lr) <= lr * 1e-6);
}

TEST_CASE("adamw matches a straight-line implementation") {
  SplitMix64 rng(2);
  ScorerParams p = oracle::random_params(rng, 5, 4);
  std::vector<double> w = flat(p);
  OptimizerState state(p.size());
  oracle::AdamW ref;
  for (int step = 0; step < 10; ++step) {
    const ScorerParams g = oracle::random_params(rng, 5, 4, 2.0);
    const double lr = 1e-2 * (1 + step % 3);
    adamw_step(p, g, state, lr);
    ref.step(w, flat(g), lr);
  }
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(std::abs(p.values()[i] - w[i]) <= 1e-12);
}

TEST_CASE("adamw rejects non-finite gradients") {
  ScorerParams p(2, 2), g(2, 2);
  g.values()[3] = NAN;
  OptimizerState state(p.size());
  CHECK_THROWS_AS(adamw_step(p, g, state, 1e-3), Error);
  CHECK(state.step == 0);
}

TEST_CASE("stage configs are validated") {
  StageConfig s = fixture::lce_stage(-1.0, 1);
  CHECK_THROWS_AS(validate(s), Error);
  s = fixture::lce_stage(1e-3, 0);
  CHECK_THROWS_AS(validate(s), Error);
  CHECK(parse_loss_kind("RankNet") == LossKind::kRankNet);
  CHECK_THROWS_AS(parse_loss_kind("hinge"), Error);
}

TEST_CASE("positives are the best-graded judged documents") {
  Qrels q;
  q.add("q", "a", 1);
  q.add("q", "b", 3);
  q.add("q", "c", 3);
  q.add("q", "d", 2);
  CHECK(positives_for(q, "q", 1) == std::vector<std::string>{"b", "c"});
  Qrels low;
  low.add("q", "a", 1);
  CHECK(positives_for(low, "q", 2).empty());
}

TEST_CASE("run_stage") {
  fixture::Bench bench;
  const auto& train = bench.data.train_queries;
  const ScorerParams init = init_params(bench.scorer());

  SUBCASE("one zero-lr step is the identity") {
    auto [p, log] = run_stage(init, fixture::lce_stage(0.0, 1), train, {}, bench.ctx, *bench.cache);
    CHECK(p == init);
    CHECK(log.train.size() == 1);
  }

  SUBCASE("contrastive loss goes down") {
    auto [p, log] = run_stage(init, fixture::lce_stage(1e-3, 500), train, {}, bench.ctx, *bench.cache);
    REQUIRE(log.train.size() == 500);
    CHECK(log.train.front().step == 1);
    CHECK(log.train.back().step == 500);
    CHECK(mean_of(log.train, 400, 500) < mean_of(log.train, 0, 100));
  }

  SUBCASE("validation is logged at every interval and at the end") {
    const std::vector<Query> val(train.begin(), train.begin() + 3);
    auto stage = fixture::lce_stage(1e-3, 250);
    auto [p, log] = run_stage(init, stage, train, val, bench.ctx, *bench.cache);
    REQUIRE(log.validation.size() == 3);
    CHECK(log.validation[0].step == 100);
    CHECK(log.validation[1].step == 200);
    CHECK(log.validation[2].step == 250);
  }

  SUBCASE("missing data names the query") {
    TrainingContext ctx = bench.ctx;
    ctx.teacher.clear();
    try {
      run_stage(init, fixture::ranknet_stage(1e-3, 1), train, {}, ctx, *bench.cache);
      FAIL("missing teacher accepted");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("'q0") != std::string::npos);
      CHECK(e.kind() == ErrorKind::kNotFound);
    }
  }

  SUBCASE("deterministic") {
    auto a = run_stage(init, fixture::lce_stage(1e-3, 120), train, {}, bench.ctx, *bench.cache);
    auto b = run_stage(init, fixture::lce_stage(1e-3, 120), train, {}, bench.ctx, *bench.cache);
    CHECK(a.first == b.first);
  }
}

TEST_CASE("ranknet agreeing with the scorer stays near zero") {
  fixture::Bench bench;
  ScorerParams p = init_params(bench.scorer());
  TrainingContext ctx = bench.ctx;
  ctx.teacher.clear();
  std::vector<Query> train;
  double min_gap = INFINITY;
  for (const auto& q : bench.data.train_queries) {
    std::vector<std::pair<double, std::string>> scored;
    for (const auto& e : ctx.rankings.at(q.id).entries) {
      scored.emplace_back(score(p, bench.cache->get(q, e.doc_id)), e.doc_id);
    }
    std::sort(scored.rbegin(), scored.rend());
    TeacherRanking t{q.id, {}, {}};
    double last = INFINITY;
    for (const auto& [s, d] : scored) {
      if (last - s < 1e-3) continue;
      if (std::isfinite(last)) min_gap = std::min(min_gap, last - s);
      t.doc_ids.push_back(d);
      last = s;
      if (t.doc_ids.size() == 5) break;
    }
    if (t.doc_ids.size() < 2) continue;
    ctx.teacher.emplace(q.id, t);
    train.push_back(q);
  }
  REQUIRE(train.size() >= 10);
  // Scaling the output layer scales every margin.
  const double k = 60.0 / min_gap;
  for (double& w : p.w2()) w *= k;

  auto [out, log] = run_stage(p, fixture::ranknet_stage(1e-6, 60), train, {}, ctx, *bench.cache);
  for (const auto& pt : log.train) CHECK(pt.loss < 1e-9);
}

TEST_CASE("run_plan") {
  fixture::Bench bench;
  const auto& train = bench.data.train_queries;
  const ScorerConfig cfg = bench.scorer();
  const auto c = fixture::lce_stage(1e-3, 150);
  const auto d = fixture::ranknet_stage(1e-3, 80);

  const auto single = run_plan(cfg, {"C", {c}}, train, {}, bench.ctx, *bench.cache);
  const auto stage = run_stage(init_params(cfg), c, train, {}, bench.ctx, *bench.cache);
  CHECK(single.first == stage.first);

  SUBCASE("a zero-lr second stage leaves the checkpoint alone") {
    auto frozen = d;
    frozen.learning_rate = 0.0;
    const auto two = run_plan(cfg, {"C->D", {c, frozen}}, train, {}, bench.ctx, *bench.cache);
    CHECK(serialize_params(two.first) == serialize_params(single.first));
    CHECK(two.second.size() == 2);
  }

  SUBCASE("optimizer state restarts at a stage boundary") {
    const auto two = run_plan(cfg, {"C->D", {c, d}}, train, {}, bench.ctx, *bench.cache);
    const auto fresh = run_stage(single.first, d, train, {}, bench.ctx, *bench.cache);
    CHECK(two.first == fresh.first);
  }

  SUBCASE("both orders produce logs of the configured lengths") {
    const auto cd = run_plan(cfg, {"C->D", {c, d}}, train, {}, bench.ctx, *bench.cache);
    const auto dc = run_plan(cfg, {"D->C", {d, c}}, train, {}, bench.ctx, *bench.cache);
    CHECK(cd.second[0].train.size() == 150);
    CHECK(cd.second[1].train.size() == 80);
    CHECK(dc.second[0].train.size() == 80);
    CHECK(dc.second[1].train.size() == 150);
    CHECK(cd.first.same_shape(dc.first));
  }

  CHECK_THROWS_AS(run_plan(cfg, {"empty", {}}, train, {}, bench.ctx, *bench.cache), Error);
}

TEST_CASE("split_train_val") {
  std::vector<Query> qs;
  for (int i = 0; i < 100; ++i) qs.push_back({"q" + std::to_string(i), "t"});
  const auto [train, val] = split_train_val(qs, 0.01, 5);
  CHECK(train.size() == 99);
  CHECK(val.size() == 1);
  const auto again = split_train_val(qs, 0.01, 5);
  CHECK(again.second.front().id == val.front().id);

  SplitMix64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.below(200);
    std::vector<Query> in;
    for (std::size_t i = 0; i < n; ++i) in.push_back({"x" + std::to_string(i), ""});
    const double fraction = 0.05 + 0.5 * rng.uniform();
    const auto nv = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    if (nv == 0 || nv >= n) {
      CHECK_THROWS_AS(split_train_val(in, fraction, trial), Error);
      continue;
    }
    const auto [a, b] = split_train_val(in, fraction, trial);
    std::set<std::string> ids;
    for (const auto& q : a) ids.insert(q.id);
    for (const auto& q : b) ids.insert(q.id);
    CHECK(a.size() + b.size() == n);
    CHECK(ids.size() == n);
  }
  CHECK_THROWS_AS(split_train_val(qs, 0.0, 1), Error);
  CHECK_THROWS_AS(split_train_val(std::vector<Query>(10, Query{"a", ""}), 0.01, 1), Error);
}

TEST_CASE("plan presets") {
  const PlanPresets full;
  const TrainPlan c = make_plan("C", full);
  REQUIRE(c.stages.size() == 1);
  CHECK(c.stages[0].loss == LossKind::kLce);
  CHECK(c.stages[0].learning_rate == 1e-5);
  CHECK(c.stages[0].max_steps == 25000);
  CHECK(c.stages[0].sampler.negatives == 99);
  CHECK(c.stages[0].sampler.pool_depth == 200);

  const TrainPlan cd = make_plan("C\xE2\x86\x92" "D", full);
  CHECK(cd.name == "C->D");
  REQUIRE(cd.stages.size() == 2);
  CHECK(cd.stages[1].loss == LossKind::kRankNet);
  CHECK(cd.stages[1].learning_rate == 1e-8);
  CHECK(cd.stages[1].max_steps == 1000);

  const TrainPlan dc = make_plan("d->c", full);
  CHECK(dc.stages[0].max_steps == 2000);
  CHECK(dc.stages[1].max_steps == 31000);

  CHECK(make_plan("NCE", full).stages[0].sampler.policy == NegativePolicy::kRandom);
  CHECK(make_plan("BCE", full).stages[0].loss == LossKind::kBce);
  CHECK_THROWS_AS(make_plan("X", full), Error);

  const PlanPresets desk = PlanPresets::desk_scale();
  const TrainPlan dc_desk = make_plan("C", desk);
  CHECK(dc_desk.stages[0].learning_rate == 1e-3);
  CHECK(dc_desk.stages[0].max_steps == 2000);
  CHECK(dc_desk.stages[0].sampler.negatives == 20);
  CHECK(dc_desk.stages[0].sampler.pool_depth == 50);
}

TEST_CASE("log CSVs number steps across stages") {
  std::vector<TrainLog> logs(2);
  logs[0].train = {{1, 0.5}, {2, 0.25}};
  logs[0].validation = {{2, 0.75}};
  logs[1].train = {{1, 0.125}};
  logs[1].validation = {{1, 1.5}};
  std::ostringstream t, v;
  write_train_csv(t, logs);
  write_validation_csv(v, logs);
  CHECK(t.str().rfind("step,loss\n1,", 0) == 0);
  CHECK(t.str().find("\n3,") != std::string::npos);
  CHECK(v.str().rfind("step,val_loss\n2,", 0) == 0);
  CHECK(v.str().find("\n3,") != std::string::npos);
}
