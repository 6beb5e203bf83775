// Copyright 2026 The RankForge Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <fmt/format.h>

#include <boost/math/special_functions/beta.hpp>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "random_cases.hpp"
#include "rankforge/error.hpp"
#include "rankforge/evaluation.hpp"
#include "rankforge/experiment.hpp"
#include "rankforge/io.hpp"
#include "rankforge/losses.hpp"
#include "table_fixture.hpp"

using namespace rankforge;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const std::function<Verdict()>& check) {
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, fmt::format("exception: {}", e.what())};
  }
  if (!v.pass) ++failures;
  fmt::print("[{}] {}. {}: {}\n", v.pass ? "PASS" : "FAIL", id, name, v.detail);
  std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Max relative error of d loss / d scores over one random case.
double score_gradient_error(const std::function<LossOutput(std::span<const double>)>& loss,
                            const std::vector<double>& s) {
  const LossOutput out = loss(s);
  double worst = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    std::vector<double> p = s;
    const double numeric = oracle::central_difference(
        [&](double v) {
          p[i] = v;
          return loss(p).value;
        },
        s[i]);
    worst = std::max(worst, oracle::relative_error(out.grad[i], numeric));
  }
  return worst;
}

// A group of feature vectors scored by `p` and fed through `loss`; returns
// the max relative error of d loss / d params.
double param_gradient_error(const std::function<LossOutput(std::span<const double>)>& loss,
                            const ScorerParams& p, const std::vector<std::vector<double>>& xs) {
  auto total = [&](const ScorerParams& q) {
    std::vector<double> s;
    for (const auto& x : xs) s.push_back(score(q, x));
    return loss(s);
  };
  std::vector<double> s;
  for (const auto& x : xs) s.push_back(score(p, x));
  const LossOutput out = loss(s);
  ScorerParams grad(p.buckets(), p.hidden());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    FeatureVector fx{xs[i]};
    accumulate_backward(p, SparseFeatures::from_dense(fx), out.grad[i], grad);
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    ScorerParams q = p;
    const double numeric = oracle::central_difference(
        [&](double w) {
          q.values()[k] = w;
          return total(q).value;
        },
        p.values()[k]);
    worst = std::max(worst, oracle::relative_error(grad.values()[k], numeric));
  }
  return worst;
}

Verdict gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  SplitMix64 rng(2024);
  const auto bce_sum = [](std::span<const double> s) {
    // Alternating labels over the group so both branches are exercised.
    LossOutput out{0.0, std::vector<double>(s.size())};
    for (std::size_t i = 0; i < s.size(); ++i) {
      const LossOutput b = bce(s[i], static_cast<int>(i % 2 == 0));
      out.value += b.value;
      out.grad[i] = b.grad[0];
    }
    return out;
  };
  const std::vector<std::pair<const char*, std::function<LossOutput(std::span<const double>)>>> losses{
      {"LCE", lce}, {"RankNet", ranknet}, {"BCE", bce_sum}};
  std::string detail;
  bool pass = true;
  for (const auto& [name, loss] : losses) {
    double worst_scores = 0.0, worst_params = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 2 + rng.below(14);
      worst_scores = std::max(worst_scores, score_gradient_error(loss, oracle::random_vector(rng, n, -4.0, 4.0)));
      const ScorerParams p = oracle::random_params(rng, 1 + rng.below(8), 1 + rng.below(6));
      std::vector<std::vector<double>> xs;
      for (std::size_t i = 0; i < n; ++i) xs.push_back(oracle::random_vector(rng, p.input_dim(), -1.0, 1.0));
      worst_params = std::max(worst_params, param_gradient_error(loss, p, xs));
    }
    pass = pass && worst_scores <= 1e-5 && worst_params <= 1e-5;
    detail += fmt::format("{} scores {:.1e} params {:.1e}; ", name, worst_scores, worst_params);
  }
  const double elapsed = seconds_since(t0);
  pass = pass && elapsed < 10.0;
  detail += fmt::format("{:.2f}s (limit 1e-5, 10s)", elapsed);
  return {pass, detail};
}

Verdict loss_closed_forms() {
  const double lce_err = std::abs(lce(std::vector<double>(100, 0.0)).value - std::log(100.0));
  const double rn_err = std::abs(ranknet(std::vector<double>(20, 0.0)).value - 190.0 * std::log(2.0));
  SplitMix64 rng(7);
  double shift_err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = oracle::random_vector(rng, 2 + rng.below(99), -5.0, 5.0);
    for (double c : {-1000.0, 1000.0}) {
      std::vector<double> t = s;
      for (double& v : t) v += c;
      shift_err = std::max({shift_err, std::abs(lce(t).value - lce(s).value),
                            std::abs(ranknet(t).value - ranknet(s).value)});
    }
  }
  const bool pass = lce_err <= 1e-9 && rn_err <= 1e-9 && shift_err <= 1e-9;
  return {pass, fmt::format("|LCE-ln100| {:.1e}, |RankNet-190ln2| {:.1e}, shift {:.1e} (limit 1e-9)",
                            lce_err, rn_err, shift_err)};
}

Verdict metric_oracle() {
  SplitMix64 rng(99);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto c = fixture::random_judged_case(rng);
    worst = std::max({worst,
                      std::abs(compute_metric(c.ranking, c.qrels, MetricSpec::ap()) -
                               oracle::average_precision(c.list, 1)),
                      std::abs(compute_metric(c.ranking, c.qrels, MetricSpec::ndcg()) -
                               oracle::ndcg(c.list, 10)),
                      std::abs(compute_metric(c.ranking, c.qrels, MetricSpec::mrr()) -
                               oracle::reciprocal_rank(c.list, 10, 1))});
  }
  Qrels q;
  q.add("q", "d1", 1);
  q.add("q", "d3", 1);
  const Ranking r{"q", {{"d1", 1, 4}, {"d2", 2, 3}, {"d3", 3, 2}, {"d4", 4, 1}}};
  const double ap = compute_metric(r, q, MetricSpec::ap());
  Qrels g;
  g.add("q", "A", 3);
  g.add("q", "B", 1);
  const Ranking ba{"q", {{"B", 1, 2}, {"A", 2, 1}}};
  const double nd = compute_metric(ba, g, MetricSpec::ndcg());
  const double nd_hand = (1.0 / std::log2(2.0) + 3.0 / std::log2(3.0)) / (3.0 / std::log2(2.0) + 1.0 / std::log2(3.0));
  const bool pass = worst <= 1e-9 && std::abs(ap - 5.0 / 6.0) <= 1e-15 &&
                    std::abs(nd - nd_hand) <= 1e-15 && fmt::format("{:.4f}", nd) == "0.7967";
  return {pass, fmt::format("1000 cases max |diff| {:.1e}; AP {:.6f} (5/6), nDCG {:.6f}", worst, ap, nd)};
}

Verdict significance_oracle() {
  const MetricReport d = fixture::report("m", {0.1, 0.2, 0.3, 0.4});
  const MetricReport z = fixture::report("m", {0, 0, 0, 0});
  const SignificanceResult r = paired_ttest(d, z);
  // Reference p from an independent incomplete-beta implementation.
  const double mean = 0.25;
  const double sd = std::sqrt((0.0225 + 0.0025 + 0.0025 + 0.0225) / 3.0);
  const double t_ref = mean / (sd / 2.0);
  const double p_ref = boost::math::ibeta(1.5, 0.5, 3.0 / (3.0 + t_ref * t_ref));
  const SignificanceResult same = paired_ttest(d, d);
  const SignificanceResult flat =
      paired_ttest(fixture::report("m", {0.5, 0.5, 0.5}), fixture::report("m", {0.2, 0.2, 0.2}));
  const bool pass = std::abs(r.t - 3.873) <= 1e-3 && std::abs(r.p - p_ref) <= 1e-4 && r.df == 3 &&
                    same.p == 1.0 && same.degenerate && !same.significant && flat.p == 0.0 &&
                    flat.degenerate;
  return {pass, fmt::format("t {:.6f}, p {:.8f} (reference {:.8f}), all-zero p {}, zero-variance p {}",
                            r.t, r.p, p_ref, same.p, flat.p)};
}

Verdict bm25_fixture() {
  Corpus c;
  c.add({"d1", "cat"});
  c.add({"d2", "dog"});
  const InvertedIndex idx = InvertedIndex::build(c);
  const double s = bm25_score(idx, Bm25Params{}, std::vector<std::string>{"cat"}, "d1");
  const double err = std::abs(s - std::log(2.0));

  SplitMix64 rng(5);
  int violations = 0;
  for (int trial = 0; trial < 500; ++trial) {
    Corpus rc;
    const std::size_t vocab = 2 + rng.below(10);
    for (std::size_t i = 0, n = 1 + rng.below(40); i < n; ++i) {
      std::string text;
      for (std::size_t k = 0, len = 1 + rng.below(10); k < len; ++k) {
        text += fmt::format("t{} ", rng.below(vocab));
      }
      rc.add({fmt::format("x{}_{}", rng.below(100), i), text});
    }
    const InvertedIndex ri = InvertedIndex::build(rc);
    const Query q{"q", fmt::format("t{} t{}", rng.below(vocab), rng.below(vocab))};
    const Ranking r = retrieve_topk(ri, Bm25Params{}, q, 1 + rng.below(30));
    try {
      validate(r);
    } catch (const Error&) {
      ++violations;
    }
    for (std::size_t i = 1; i < r.depth(); ++i) {
      const auto& a = r.entries[i - 1];
      const auto& b = r.entries[i];
      if (!(a.score > b.score || (a.score == b.score && a.doc_id < b.doc_id))) ++violations;
    }
  }
  return {err <= 1e-12 && violations == 0,
          fmt::format("score {:.15f}, |s-ln2| {:.1e}; 500 random corpora, {} invariant violations",
                      s, err, violations)};
}

Verdict zero_lr_identity() {
  fixture::Bench bench(SynthSpec{}, 1024);
  PlanPresets presets = PlanPresets::desk_scale();
  presets.seed = 11;
  presets.sampler.seed = 12;
  const TrainPlan c = make_plan("C", presets);
  TrainPlan cd = make_plan("C->D", presets);
  cd.stages[1].learning_rate = 0.0;
  const ScorerConfig cfg{1024, 16, 13};
  const auto& train = bench.data.train_queries;
  const auto a = run_plan(cfg, c, train, {}, bench.ctx, *bench.cache);
  const auto b = run_plan(cfg, cd, train, {}, bench.ctx, *bench.cache);
  const bool same = serialize_params(a.first) == serialize_params(b.first);
  return {same, fmt::format("[C] vs [C, D(lr=0)] checkpoints {} ({} bytes)",
                            same ? "bit-identical" : "differ", serialize_params(a.first).size())};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = fixture::read_file(e.path().string());
  }
  return files;
}

Verdict end_to_end() {
  const fs::path root = fs::temp_directory_path() / "rankforge_acceptance";
  fs::remove_all(root);
  ExperimentConfig config = default_experiment_config();
  config.out = root / "run1";
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentSummary s = run_experiment(config);
  const double elapsed = seconds_since(t0);

  ExperimentConfig again = config;
  again.out = root / "run2";
  run_experiment(again);
  const bool reproducible = snapshot(config.out) == snapshot(again.out);

  // Distillation is gated on the noiseless teacher.
  ExperimentConfig oracle_teacher = config;
  oracle_teacher.synth.teacher_noise = 0.0;
  oracle_teacher.out = root / "sigma0";
  const ExperimentSummary z = run_experiment(oracle_teacher);
  fs::remove_all(root);

  const double untrained = mean_of(s.reports.at("untrained"), "nDCG@10");
  const double c_gain = mean_of(s.reports.at("C"), "nDCG@10") - untrained;
  const double untrained0 = mean_of(z.reports.at("untrained"), "nDCG@10");
  const double d_gain = mean_of(z.reports.at("D"), "nDCG@10") - untrained0;
  const bool pass = c_gain >= 0.10 && d_gain >= 0.05 && elapsed < 120.0 && reproducible;
  return {pass, fmt::format("C {:+.4f} (need +0.10), D on sigma=0 teacher {:+.4f} (need +0.05) nDCG@10 over "
                            "the untrained re-rank; experiment {:.1f}s (limit 120s); rerun {}",
                            c_gain, d_gain, elapsed, reproducible ? "bit-identical" : "differs")};
}

Verdict golden_table() {
  const std::string got = fixture::comparison_markdown();
  const std::string want = fixture::read_file(RANKFORGE_TEST_DATA "/comparison.md");
  bool markers = true;
  for (const char* m : {"**", "*", "\xE2\x80\xA0", "\xE2\x86\x93"}) markers = markers && got.find(m) != std::string::npos;
  return {got == want && markers,
          fmt::format("{} bytes, {}", got.size(), got == want ? "byte-identical to golden" : "differs from golden")};
}

Verdict round_trips() {
  SplitMix64 rng(31337);
  int run_fail = 0, ckpt_fail = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto rankings = fixture::random_rankings(rng);
    std::istringstream in(format_run(rankings, "rt"));
    if (parse_run(in) != rankings) ++run_fail;
  }
  for (int trial = 0; trial < 1000; ++trial) {
    ScorerParams p(1 + rng.below(64), 1 + rng.below(16));
    for (double& v : p.values()) v = std::ldexp(2.0 * rng.uniform() - 1.0, static_cast<int>(rng.below(64)) - 32);
    if (deserialize_params(serialize_params(p)) != p) ++ckpt_fail;
  }
  return {run_fail == 0 && ckpt_fail == 0,
          fmt::format("1000 runs ({} failures), 1000 checkpoints ({} failures)", run_fail, ckpt_fail)};
}

}  // namespace

int main() {
  report(1, "gradient correctness", gradient_correctness);
  report(2, "loss closed forms", loss_closed_forms);
  report(3, "metric oracle", metric_oracle);
  report(4, "significance oracle", significance_oracle);
  report(5, "BM25 fixture", bm25_fixture);
  report(6, "zero-lr identity", zero_lr_identity);
  report(7, "end-to-end synthetic gate", end_to_end);
  report(8, "table golden file", golden_table);
  report(9, "format round trips", round_trips);
  fmt::print("{} of 9 criteria passed\n", 9 - failures);
  return failures == 0 ? 0 : 1;
}
