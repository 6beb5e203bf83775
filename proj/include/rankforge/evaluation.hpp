// Copyright 2026 The RankForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rankforge/retrieval.hpp"
#include "rankforge/scorer.hpp"
#include "rankforge/types.hpp"

namespace rankforge {

inline constexpr std::size_t kDefaultRerankDepth = 100;
inline constexpr double kSignificanceLevel = 0.01;

enum class MetricKind { kAP, kNDCG, kMRR };
enum class Gain { kLinear, kExponential };

struct MetricSpec {
  MetricKind kind = MetricKind::kNDCG;
  std::optional<std::size_t> cutoff;
  int threshold = 1;  // grades below this count as non-relevant (gain 0)
  Gain gain = Gain::kLinear;

  /// "AP", "nDCG@10", "MRR@10", with ":rel=N" / ":gain=exp" appended when
  /// they differ from the defaults.
  std::string name() const;

  static MetricSpec ap(int threshold = 1) { return {MetricKind::kAP, std::nullopt, threshold}; }
  static MetricSpec ndcg(std::size_t cutoff = 10) { return {MetricKind::kNDCG, cutoff}; }
  static MetricSpec mrr(std::size_t cutoff = 10, int threshold = 1) {
    return {MetricKind::kMRR, cutoff, threshold};
  }
};

/// Inverse of MetricSpec::name(). "ndcg" and "mrr" without a cutoff get @10.
MetricSpec parse_metric_spec(std::string_view text);
/// AP, nDCG@10, MRR@10.
std::vector<MetricSpec> default_metrics();
/// Same metrics with AP and MRR binarized at grade 2.
std::vector<MetricSpec> dl_metrics();

/// Per-query score of one ranking; 0 when the query has nothing relevant.
double compute_metric(const Ranking& ranking, const Qrels& qrels, const MetricSpec& spec);

struct MetricReport {
  std::string metric;
  std::map<std::string, double> per_query;  // sorted by query id
  double mean = 0.0;                         // summed in query-id order
};

/// One report per spec. Queries with no relevant judgment under a spec are
/// left out of that report. Throws when a report would be empty or when a
/// query appears twice in `rankings`.
std::vector<MetricReport> evaluate_run(const std::vector<Ranking>& rankings, const Qrels& qrels,
                                       const std::vector<MetricSpec>& specs);

/// CSV `qid,metric,value` with one row per query and metric.
void write_report_csv(std::ostream& out, const std::vector<MetricReport>& reports);

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double regularized_incomplete_beta(double a, double b, double x);

struct SignificanceResult {
  double t = 0.0;
  std::size_t df = 0;
  double p = 1.0;
  bool significant = false;
  bool degenerate = false;
};

/// Two-tailed paired Student's t-test on per-query differences a - b.
/// Throws kMismatch (listing the differing ids) when query sets differ, and
/// kInvalidArgument for fewer than two queries.
SignificanceResult paired_ttest(const MetricReport& a, const MetricReport& b,
                                double alpha = kSignificanceLevel);

/// Re-scores the top `depth` entries of `run` with the scorer and sorts by
/// descending score; ties keep first-stage order. Throws kNotFound when a
/// document has no text in the corpus.
Ranking rerank(const Query& query, const Ranking& run, const ScorerParams& params,
               const Corpus& corpus, const InvertedIndex& index, const Bm25Params& bm25,
               std::size_t depth = kDefaultRerankDepth);
/// `rerank` over every run, in parallel, preserving order. Every run's
/// query must be in `queries`.
std::vector<Ranking> rerank_all(const std::vector<Query>& queries,
                                const std::vector<Ranking>& runs, const ScorerParams& params,
                                const Corpus& corpus, const InvertedIndex& index,
                                const Bm25Params& bm25, std::size_t depth = kDefaultRerankDepth);

// Comparison tables.

struct TableColumn {
  std::string group;  // query-set label; may be empty
  MetricSpec metric;
};

/// A system's reports, one per table column.
struct SystemReports {
  std::string label;
  std::vector<MetricReport> cells;
};

struct TableCell {
  double value = 0.0;
  bool bold = false;            // best of its sibling pair (ties: both)
  bool sig_sibling = false;     // "*"
  bool sig_baseline = false;    // "†"
  bool below_baseline = false;  // "↓"
};

struct TableRow {
  std::string label;
  std::vector<TableCell> cells;
};

struct ComparisonTable {
  std::string title;
  std::vector<TableColumn> columns;
  std::vector<TableRow> rows;  // baseline first, then variants in input order
};

/// Sibling pairs index into `variants`. Markers use paired t-tests at `alpha`.
ComparisonTable build_table(std::string title, const std::vector<TableColumn>& columns,
                            const SystemReports& baseline,
                            const std::vector<SystemReports>& variants,
                            const std::vector<std::pair<std::size_t, std::size_t>>& pairings,
                            double alpha = kSignificanceLevel);

/// Markdown rendering: values to 4 decimals without a leading zero, the best
/// of a pair in `**`, then markers `*`, `†`, `↓` after a space.
std::string render_markdown(const ComparisonTable& table);

}  // namespace rankforge
