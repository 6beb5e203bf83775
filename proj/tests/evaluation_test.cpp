// Copyright 2026 The RankForge Authors
// SPDX-License-Identifier: Apache-2.0

#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "rankforge/error.hpp"
#include "rankforge/evaluation.hpp"
#include "table_fixture.hpp"

using namespace rankforge;

namespace {

Ranking ranking(const std::string& qid, std::vector<std::string> docs) {
  Ranking r{qid, {}};
  for (std::size_t i = 0; i < docs.size(); ++i) {
    r.entries.push_back({docs[i], static_cast<int>(i + 1), static_cast<double>(docs.size() - i)});
  }
  return r;
}

MetricReport diffs_report(const std::vector<double>& d) {
  return fixture::report("m", d);
}

std::string kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return std::string(to_string(e.kind()));
  }
  return "none";
}

}  // namespace

TEST_CASE("hand-computed metric fixtures") {
  Qrels q;
  q.add("q", "d1", 1);
  q.add("q", "d3", 1);
  const Ranking r = ranking("q", {"d1", "d2", "d3", "d4"});
  CHECK(compute_metric(r, q, MetricSpec::ap()) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));

  Qrels g;
  g.add("q", "A", 3);
  g.add("q", "B", 1);
  const double expected = (1.0 / std::log2(2.0) + 3.0 / std::log2(3.0)) /
                          (3.0 / std::log2(2.0) + 1.0 / std::log2(3.0));
  CHECK(compute_metric(ranking("q", {"B", "A"}), g, MetricSpec::ndcg()) == doctest::Approx(expected).epsilon(1e-15));
  CHECK(expected == doctest::Approx(0.7967).epsilon(1e-4));

  Qrels m;
  m.add("q", "x", 1);
  CHECK(compute_metric(ranking("q", {"a", "b", "x"}), m, MetricSpec::mrr()) == doctest::Approx(1.0 / 3.0));
  std::vector<std::string> deep;
  for (int i = 0; i < 10; ++i) deep.push_back("n" + std::to_string(i));
  deep.push_back("x");
  CHECK(compute_metric(ranking("q", deep), m, MetricSpec::mrr()) == 0.0);
}

TEST_CASE("relevance threshold and gain options") {
  Qrels q;
  q.add("q", "a", 1);
  q.add("q", "b", 2);
  const Ranking r = ranking("q", {"a", "b"});
  CHECK(compute_metric(r, q, MetricSpec::mrr(10, 2)) == 0.5);
  CHECK(compute_metric(r, q, MetricSpec::ap(2)) == 0.5);
  MetricSpec exp = MetricSpec::ndcg();
  exp.gain = Gain::kExponential;
  const double want = (1.0 + 3.0 / std::log2(3.0)) / (3.0 + 1.0 / std::log2(3.0));
  CHECK(compute_metric(r, q, exp) == doctest::Approx(want).epsilon(1e-15));
}

TEST_CASE("metric names") {
  CHECK(MetricSpec::ap().name() == "AP");
  CHECK(MetricSpec::ndcg().name() == "nDCG@10");
  CHECK(MetricSpec::mrr(10, 2).name() == "MRR@10:rel=2");
  for (const char* s : {"AP", "nDCG@10", "MRR@10", "nDCG@5:gain=exp", "AP:rel=2"}) {
    CHECK(parse_metric_spec(s).name() == s);
  }
  CHECK(parse_metric_spec("ndcg").name() == "nDCG@10");
  CHECK_THROWS_AS(parse_metric_spec("recall"), Error);
  CHECK_THROWS_AS(parse_metric_spec("nDCG@0"), Error);
  CHECK(dl_metrics()[0].threshold == 2);
}

TEST_CASE("evaluate_run") {
  Qrels q;
  q.add("q1", "a", 2);
  q.add("q1", "b", 1);
  q.add("q2", "c", 1);
  q.add("q3", "z", 0);
  const std::vector<Ranking> ideal{ranking("q1", {"a", "b", "x"}), ranking("q2", {"c"}),
                                   ranking("q3", {"z"})};
  const auto reports = evaluate_run(ideal, q, {MetricSpec::ndcg()});
  CHECK(reports[0].mean == 1.0);
  CHECK(reports[0].per_query.size() == 2);
  CHECK(reports[0].per_query.count("q3") == 0);

  const auto one = evaluate_run({ranking("q2", {"x", "c"})}, q, {MetricSpec::mrr()});
  CHECK(one[0].mean == one[0].per_query.at("q2"));
  CHECK(one[0].mean == 0.5);

  // A query whose relevant documents were all missed still counts.
  const auto miss = evaluate_run({ranking("q1", {"x"}), ranking("q2", {"c"})}, q, {MetricSpec::ap()});
  CHECK(miss[0].per_query.at("q1") == 0.0);
  CHECK(miss[0].mean == 0.5);

  CHECK_THROWS_AS(evaluate_run({ranking("q3", {"z"})}, q, {MetricSpec::ap()}), Error);
  CHECK_THROWS_AS(evaluate_run({ranking("q1", {"a"}), ranking("q1", {"b"})}, q, {MetricSpec::ap()}),
                  Error);

  std::ostringstream csv;
  write_report_csv(csv, one);
  CHECK(csv.str() == "qid,metric,value\nq2,MRR@10,0.500000\n");
}

TEST_CASE("incomplete beta against an independent implementation") {
  SplitMix64 rng(13);
  for (int trial = 0; trial < 300; ++trial) {
    const double a = 0.05 + 40.0 * rng.uniform();
    const double b = 0.05 + 40.0 * rng.uniform();
    const double x = rng.uniform();
    CHECK(std::abs(regularized_incomplete_beta(a, b, x) - boost::math::ibeta(a, b, x)) <= 1e-8);
  }
  CHECK(regularized_incomplete_beta(2, 3, 0.0) == 0.0);
  CHECK(regularized_incomplete_beta(2, 3, 1.0) == 1.0);
  CHECK_THROWS_AS(regularized_incomplete_beta(-1, 3, 0.5), Error);
}

TEST_CASE("paired t-test") {
  const MetricReport zero = diffs_report({0, 0, 0, 0});
  const MetricReport d = diffs_report({0.1, 0.2, 0.3, 0.4});
  const SignificanceResult r = paired_ttest(d, zero);
  CHECK(std::abs(r.t - 3.8729833462074175) <= 1e-9);
  CHECK(r.df == 3);
  CHECK(std::abs(r.p - 0.03046629166217096) <= 1e-9);
  CHECK_FALSE(r.significant);
  CHECK(paired_ttest(d, zero, 0.05).significant);

  const SignificanceResult swapped = paired_ttest(zero, d);
  CHECK(swapped.t == -r.t);
  CHECK(swapped.p == r.p);

  const SignificanceResult same = paired_ttest(d, d);
  CHECK(same.p == 1.0);
  CHECK(same.degenerate);
  CHECK_FALSE(same.significant);

  const SignificanceResult flat = paired_ttest(diffs_report({0.5, 0.5, 0.5}), diffs_report({0.25, 0.25, 0.25}));
  CHECK(flat.p == 0.0);
  CHECK(flat.degenerate);
  CHECK(flat.significant);

  MetricReport other = zero;
  other.per_query.erase("q4");
  other.per_query.emplace("q9", 0.0);
  try {
    paired_ttest(d, other);
    FAIL("mismatched query sets accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kMismatch);
    const std::string msg = e.what();
    CHECK(msg.find("q4") != std::string::npos);
    CHECK(msg.find("q9") != std::string::npos);
  }
  CHECK(kind_of([] { paired_ttest(diffs_report({1}), diffs_report({0})); }) == "invalid");
}

TEST_CASE("t-test is invariant to a common offset") {
  SplitMix64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(12), b(12), a2(12), b2(12);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = rng.uniform() * 0.5;
      b[i] = rng.uniform() * 0.5;
      a2[i] = a[i] + 0.25;
      b2[i] = b[i] + 0.25;
    }
    const auto x = paired_ttest(diffs_report(a), diffs_report(b));
    const auto y = paired_ttest(diffs_report(a2), diffs_report(b2));
    CHECK(x.p == doctest::Approx(y.p).epsilon(1e-9));
  }
}

TEST_CASE("rerank") {
  Corpus c;
  c.add({"A", "car"});
  c.add({"B", "red car"});
  c.add({"C", "blue"});
  const InvertedIndex idx = InvertedIndex::build(c);
  const Query q{"q", "red car"};
  const Ranking run = ranking("q", {"C", "A", "B"});

  const ScorerParams zero(8, 2);
  CHECK(rerank(q, run, zero, c, idx, {}, 100).entries.size() == 3);
  const Ranking same = rerank(q, run, zero, c, idx, {}, 100);
  for (std::size_t i = 0; i < 3; ++i) CHECK(same.entries[i].doc_id == run.entries[i].doc_id);
  CHECK(rerank(q, run, zero, c, idx, {}, 1).entries.size() == 1);
  CHECK(rerank(q, run, zero, c, idx, {}, 1).entries[0].doc_id == "C");

  // One hidden unit reading the matched-term fraction only.
  ScorerParams overlap(8, 2);
  overlap.w1()[8 + 1] = 1.0;
  overlap.w2()[0] = 1.0;
  const Ranking r = rerank(q, run, overlap, c, idx, {}, 100);
  CHECK(r.entries[0].doc_id == "B");
  CHECK(r.entries[1].doc_id == "A");
  CHECK(r.entries[2].doc_id == "C");
  CHECK_NOTHROW(validate(r));

  const Ranking ghost = ranking("q", {"A", "nowhere"});
  CHECK(kind_of([&] { rerank(q, ghost, zero, c, idx, {}, 100); }) == "not-found");
}

TEST_CASE("table markers") {
  const std::vector<TableColumn> cols{{"", MetricSpec::ap()}};
  const SystemReports base{"B", {fixture::report("AP", {0.5, 0.6, 0.4, 0.5})}};
  const SystemReports low{"L", {fixture::report("AP", {0.6, 0.4, 0.5, 0.45})}};
  const SignificanceResult p = paired_ttest(low.cells[0], base.cells[0]);
  REQUIRE(p.p > 0.3);
  const ComparisonTable t = build_table("", cols, base, {low}, {});
  const TableCell& cell = t.rows[1].cells[0];
  CHECK(cell.below_baseline);
  CHECK_FALSE(cell.sig_baseline);
  CHECK_FALSE(cell.bold);
  CHECK(render_markdown(t).find("| L | .4875 ↓ |") != std::string::npos);

  const ComparisonTable twins = build_table("", cols, base, {low, low}, {{0, 1}});
  CHECK(twins.rows[1].cells[0].bold);
  CHECK(twins.rows[2].cells[0].bold);
  CHECK_FALSE(twins.rows[1].cells[0].sig_sibling);

  const ComparisonTable alone = build_table("", cols, base, {}, {});
  CHECK(render_markdown(alone) == "| System | AP |\n|---|---:|\n| B | .5000 |\n");

  CHECK_THROWS_AS(build_table("", cols, base, {low}, {{0, 1}}), Error);
}

TEST_CASE("golden comparison table") {
  CHECK(fixture::comparison_markdown() == fixture::read_file(RANKFORGE_TEST_DATA "/comparison.md"));
}
