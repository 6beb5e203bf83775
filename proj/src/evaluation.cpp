// Copyright 2026 The RankForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "rankforge/evaluation.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "rankforge/error.hpp"
#include "rankforge/parallel.hpp"

namespace rankforge {
namespace {

double gain_of(int grade, const MetricSpec& spec) {
  if (grade < spec.threshold || grade <= 0) return 0.0;
  return spec.gain == Gain::kLinear ? static_cast<double>(grade)
                                    : std::exp2(static_cast<double>(grade)) - 1.0;
}

std::size_t depth_of(const Ranking& r, const MetricSpec& spec) {
  return spec.cutoff ? std::min(*spec.cutoff, r.depth()) : r.depth();
}

bool has_relevant(const Qrels& qrels, const std::string& qid, const MetricSpec& spec) {
  for (const auto& [doc, grade] : qrels.judgments(qid)) {
    if (gain_of(grade, spec) > 0.0) return true;
  }
  return false;
}

double average_precision(const Ranking& r, const Qrels& qrels, const MetricSpec& spec) {
  const auto& judged = qrels.judgments(r.query_id);
  std::size_t total_relevant = 0;
  for (const auto& [doc, grade] : judged) {
    if (gain_of(grade, spec) > 0.0) ++total_relevant;
  }
  if (total_relevant == 0) return 0.0;
  const std::size_t depth = depth_of(r, spec);
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < depth; ++i) {
    auto it = judged.find(r.entries[i].doc_id);
    if (it != judged.end() && gain_of(it->second, spec) > 0.0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(total_relevant);
}

double ndcg(const Ranking& r, const Qrels& qrels, const MetricSpec& spec) {
  const auto& judged = qrels.judgments(r.query_id);
  const std::size_t depth = depth_of(r, spec);
  double dcg = 0.0;
  for (std::size_t i = 0; i < depth; ++i) {
    auto it = judged.find(r.entries[i].doc_id);
    if (it == judged.end()) continue;
    dcg += gain_of(it->second, spec) / std::log2(static_cast<double>(i + 2));
  }
  std::vector<double> ideal;
  for (const auto& [doc, grade] : judged) {
    const double g = gain_of(grade, spec);
    if (g > 0.0) ideal.push_back(g);
  }
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  const std::size_t ideal_depth = spec.cutoff ? std::min(*spec.cutoff, ideal.size()) : ideal.size();
  double idcg = 0.0;
  for (std::size_t i = 0; i < ideal_depth; ++i) idcg += ideal[i] / std::log2(static_cast<double>(i + 2));
  return idcg > 0.0 ? dcg / idcg : 0.0;
}

double reciprocal_rank(const Ranking& r, const Qrels& qrels, const MetricSpec& spec) {
  const auto& judged = qrels.judgments(r.query_id);
  const std::size_t depth = depth_of(r, spec);
  for (std::size_t i = 0; i < depth; ++i) {
    auto it = judged.find(r.entries[i].doc_id);
    if (it != judged.end() && gain_of(it->second, spec) > 0.0) {
      return 1.0 / static_cast<double>(i + 1);
    }
  }
  return 0.0;
}

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 10000;
  constexpr double kEpsilon = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double dm = m, m2 = 2.0 * m;
    double aa = dm * (b - dm) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + dm) * (qab + dm) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double step = d * c;
    h *= step;
    if (std::abs(step - 1.0) < kEpsilon) return h;
  }
  throw Error(ErrorKind::kNumeric,
              fmt::format("incomplete beta did not converge for a={} b={} x={}", a, b, x));
}

std::string format_value(double v) {
  std::string s = fmt::format("{:.4f}", v);
  if (s.rfind("0.", 0) == 0) s.erase(0, 1);
  return s;
}

}  // namespace

std::string MetricSpec::name() const {
  std::string out;
  switch (kind) {
    case MetricKind::kAP:
      out = "AP";
      break;
    case MetricKind::kNDCG:
      out = "nDCG";
      break;
    case MetricKind::kMRR:
      out = "MRR";
      break;
  }
  if (cutoff) out += fmt::format("@{}", *cutoff);
  if (threshold != 1) out += fmt::format(":rel={}", threshold);
  if (gain == Gain::kExponential) out += ":gain=exp";
  return out;
}

MetricSpec parse_metric_spec(std::string_view text) {
  auto fail = [&] {
    return Error(ErrorKind::kInvalidArgument, fmt::format("unknown metric '{}'", text));
  };
  std::string_view head = text.substr(0, text.find(':'));
  std::string_view options = head.size() < text.size() ? text.substr(head.size()) : "";
  std::string_view base = head.substr(0, head.find('@'));
  std::string lowered(base);
  for (char& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  MetricSpec spec;
  if (lowered == "ap") {
    spec.kind = MetricKind::kAP;
  } else if (lowered == "ndcg") {
    spec.kind = MetricKind::kNDCG;
    spec.cutoff = 10;
  } else if (lowered == "mrr" || lowered == "rr") {
    spec.kind = MetricKind::kMRR;
    spec.cutoff = 10;
  } else {
    throw fail();
  }
  if (base.size() < head.size()) {
    std::string_view c = head.substr(base.size() + 1);
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), value);
    if (ec != std::errc() || ptr != c.data() + c.size() || value == 0) throw fail();
    spec.cutoff = value;
  }
  while (!options.empty()) {
    options.remove_prefix(1);  // ':'
    const auto next = options.find(':');
    const std::string_view opt = options.substr(0, next);
    options = next == std::string_view::npos ? std::string_view{} : options.substr(next);
    if (opt.rfind("rel=", 0) == 0) {
      const auto v = opt.substr(4);
      auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), spec.threshold);
      if (ec != std::errc() || ptr != v.data() + v.size() || spec.threshold < 1) throw fail();
    } else if (opt == "gain=exp") {
      spec.gain = Gain::kExponential;
    } else if (opt == "gain=linear") {
      spec.gain = Gain::kLinear;
    } else {
      throw fail();
    }
  }
  return spec;
}

std::vector<MetricSpec> default_metrics() {
  return {MetricSpec::ap(), MetricSpec::ndcg(), MetricSpec::mrr()};
}

std::vector<MetricSpec> dl_metrics() {
  return {MetricSpec::ap(2), MetricSpec::ndcg(), MetricSpec::mrr(10, 2)};
}

double compute_metric(const Ranking& ranking, const Qrels& qrels, const MetricSpec& spec) {
  if (spec.cutoff && *spec.cutoff == 0) {
    throw Error(ErrorKind::kInvalidArgument, "metric cutoff must be >= 1");
  }
  switch (spec.kind) {
    case MetricKind::kAP:
      return average_precision(ranking, qrels, spec);
    case MetricKind::kNDCG:
      return ndcg(ranking, qrels, spec);
    case MetricKind::kMRR:
      return reciprocal_rank(ranking, qrels, spec);
  }
  return 0.0;
}

std::vector<MetricReport> evaluate_run(const std::vector<Ranking>& rankings, const Qrels& qrels,
                                       const std::vector<MetricSpec>& specs) {
  std::unordered_set<std::string> seen;
  for (const Ranking& r : rankings) {
    if (!seen.insert(r.query_id).second) {
      throw Error(ErrorKind::kInvalidArgument,
                  fmt::format("query '{}' appears twice in the run", r.query_id));
    }
  }
  std::vector<MetricReport> reports;
  for (const MetricSpec& spec : specs) {
    MetricReport report;
    report.metric = spec.name();
    std::vector<double> values(rankings.size(), 0.0);
    std::vector<char> evaluable(rankings.size(), 0);
    parallel_for(rankings.size(), [&](std::size_t i) {
      if (has_relevant(qrels, rankings[i].query_id, spec)) {
        evaluable[i] = 1;
        values[i] = compute_metric(rankings[i], qrels, spec);
      }
    });
    for (std::size_t i = 0; i < rankings.size(); ++i) {
      if (evaluable[i]) report.per_query.emplace(rankings[i].query_id, values[i]);
    }
    if (report.per_query.empty()) {
      throw Error(ErrorKind::kInvalidArgument,
                  fmt::format("no query in the run has relevant judgments for {}", report.metric));
    }
    double sum = 0.0;
    for (const auto& [qid, v] : report.per_query) sum += v;
    report.mean = sum / static_cast<double>(report.per_query.size());
    reports.push_back(std::move(report));
  }
  return reports;
}

void write_report_csv(std::ostream& out, const std::vector<MetricReport>& reports) {
  out << "qid,metric,value\n";
  for (const MetricReport& r : reports) {
    for (const auto& [qid, v] : r.per_query) out << fmt::format("{},{},{:.6f}\n", qid, r.metric, v);
  }
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("incomplete beta outside its domain: a={} b={} x={}", a, b, x));
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

SignificanceResult paired_ttest(const MetricReport& a, const MetricReport& b, double alpha) {
  std::vector<std::string> only;
  for (const auto& [q, v] : a.per_query) {
    if (b.per_query.count(q) == 0) only.push_back(q);
  }
  for (const auto& [q, v] : b.per_query) {
    if (a.per_query.count(q) == 0) only.push_back(q);
  }
  std::sort(only.begin(), only.end());
  if (!only.empty()) {
    std::string list;
    for (const auto& q : only) list += (list.empty() ? "" : ", ") + q;
    throw Error(ErrorKind::kMismatch,
                fmt::format("query sets differ ({} vs {}): {}", a.metric, b.metric, list));
  }
  const std::size_t n = a.per_query.size();
  if (n < 2) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("paired t-test needs at least 2 queries, got {}", n));
  }
  std::vector<double> diffs;
  diffs.reserve(n);
  for (auto ia = a.per_query.begin(), ib = b.per_query.begin(); ia != a.per_query.end(); ++ia, ++ib) {
    diffs.push_back(ia->second - ib->second);
  }
  const double nd = static_cast<double>(n);
  const double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / nd;
  double ss = 0.0;
  for (double d : diffs) ss += (d - mean) * (d - mean);
  const double sd = std::sqrt(ss / (nd - 1.0));

  SignificanceResult r;
  r.df = n - 1;
  const bool all_zero = std::all_of(diffs.begin(), diffs.end(), [](double d) { return d == 0.0; });
  if (all_zero) {
    r.degenerate = true;
    r.p = 1.0;
    return r;
  }
  if (sd == 0.0) {
    r.degenerate = true;
    r.t = mean > 0.0 ? INFINITY : -INFINITY;
    r.p = 0.0;
    r.significant = r.p < alpha;
    return r;
  }
  r.t = mean / (sd / std::sqrt(nd));
  const double df = static_cast<double>(r.df);
  r.p = std::clamp(regularized_incomplete_beta(df / 2.0, 0.5, df / (df + r.t * r.t)), 0.0, 1.0);
  r.significant = r.p < alpha;
  return r;
}

Ranking rerank(const Query& query, const Ranking& run, const ScorerParams& params,
               const Corpus& corpus, const InvertedIndex& index, const Bm25Params& bm25,
               std::size_t depth) {
  if (depth == 0) throw Error(ErrorKind::kInvalidArgument, "re-rank depth must be >= 1");
  const std::size_t n = std::min(depth, run.depth());
  const auto tokens = tokenize(query.text);
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Document* doc = corpus.find(run.entries[i].doc_id);
    if (doc == nullptr) {
      throw Error(ErrorKind::kNotFound,
                  fmt::format("query '{}': document '{}' has no text", run.query_id,
                              run.entries[i].doc_id));
    }
    const auto x = extract_features(index, bm25, tokens, *doc, params.buckets());
    scored.emplace_back(score(params, x.values), i);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  Ranking out{run.query_id, {}};
  out.entries.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    out.entries.push_back(
        RankedDoc{run.entries[scored[r].second].doc_id, static_cast<int>(r + 1), scored[r].first});
  }
  return out;
}

std::vector<Ranking> rerank_all(const std::vector<Query>& queries,
                                const std::vector<Ranking>& runs, const ScorerParams& params,
                                const Corpus& corpus, const InvertedIndex& index,
                                const Bm25Params& bm25, std::size_t depth) {
  std::unordered_map<std::string, const Query*> by_id;
  for (const Query& q : queries) by_id.emplace(q.id, &q);
  std::vector<const Query*> aligned(runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    auto it = by_id.find(runs[i].query_id);
    if (it == by_id.end()) {
      throw Error(ErrorKind::kNotFound,
                  fmt::format("run query '{}' is missing from the query file", runs[i].query_id));
    }
    aligned[i] = it->second;
  }
  std::vector<Ranking> out(runs.size());
  parallel_for(runs.size(), [&](std::size_t i) {
    out[i] = rerank(*aligned[i], runs[i], params, corpus, index, bm25, depth);
  });
  return out;
}

ComparisonTable build_table(std::string title, const std::vector<TableColumn>& columns,
                            const SystemReports& baseline,
                            const std::vector<SystemReports>& variants,
                            const std::vector<std::pair<std::size_t, std::size_t>>& pairings,
                            double alpha) {
  auto check = [&](const SystemReports& s) {
    if (s.cells.size() != columns.size()) {
      throw Error(ErrorKind::kMismatch,
                  fmt::format("system '{}' has {} cells for {} columns", s.label, s.cells.size(),
                              columns.size()));
    }
  };
  check(baseline);
  for (const auto& v : variants) check(v);
  for (const auto& [x, y] : pairings) {
    if (x >= variants.size() || y >= variants.size() || x == y) {
      throw Error(ErrorKind::kInvalidArgument,
                  fmt::format("invalid sibling pair ({}, {})", x, y));
    }
  }

  ComparisonTable table{std::move(title), columns, {}};
  TableRow base_row{baseline.label, {}};
  for (const auto& cell : baseline.cells) base_row.cells.push_back({cell.mean});
  table.rows.push_back(std::move(base_row));

  for (const auto& v : variants) {
    TableRow row{v.label, {}};
    for (std::size_t c = 0; c < columns.size(); ++c) {
      TableCell cell{v.cells[c].mean};
      cell.sig_baseline = paired_ttest(v.cells[c], baseline.cells[c], alpha).significant;
      cell.below_baseline = v.cells[c].mean < baseline.cells[c].mean;
      row.cells.push_back(cell);
    }
    table.rows.push_back(std::move(row));
  }
  for (const auto& [x, y] : pairings) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      TableCell& cx = table.rows[x + 1].cells[c];
      TableCell& cy = table.rows[y + 1].cells[c];
      const bool sig = paired_ttest(variants[x].cells[c], variants[y].cells[c], alpha).significant;
      cx.sig_sibling = cx.sig_sibling || sig;
      cy.sig_sibling = cy.sig_sibling || sig;
      if (cx.value >= cy.value) cx.bold = true;
      if (cy.value >= cx.value) cy.bold = true;
    }
  }
  return table;
}

std::string render_markdown(const ComparisonTable& table) {
  fmt::memory_buffer buf;
  auto out = std::back_inserter(buf);
  if (!table.title.empty()) fmt::format_to(out, "### {}\n\n", table.title);
  fmt::format_to(out, "| System |");
  for (const auto& col : table.columns) {
    if (col.group.empty()) {
      fmt::format_to(out, " {} |", col.metric.name());
    } else {
      fmt::format_to(out, " {} {} |", col.group, col.metric.name());
    }
  }
  fmt::format_to(out, "\n|---|");
  for (std::size_t i = 0; i < table.columns.size(); ++i) fmt::format_to(out, "---:|");
  fmt::format_to(out, "\n");
  for (const auto& row : table.rows) {
    fmt::format_to(out, "| {} |", row.label);
    for (const auto& cell : row.cells) {
      std::string text = format_value(cell.value);
      if (cell.bold) text = "**" + text + "**";
      std::string markers;
      if (cell.sig_sibling) markers += "*";
      if (cell.sig_baseline) markers += "\u2020";
      if (cell.below_baseline) markers += "\u2193";
      if (!markers.empty()) text += " " + markers;
      fmt::format_to(out, " {} |", text);
    }
    fmt::format_to(out, "\n");
  }
  return fmt::to_string(buf);
}

}  // namespace rankforge
