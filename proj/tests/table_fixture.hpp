// Copyright 2026 The RankForge Authors
// SPDX-License-Identifier: Apache-2.0

// Three systems over five queries whose markers follow by hand from the
// table rules. First column: X beats the baseline (t = 6.71, df 4,
// p < 0.01) and Y (t = 8.55); Y is below the baseline with p well above
// 0.01. Second column: X and Y are identical, so both are bold and the
// sibling test is degenerate.

#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "rankforge/evaluation.hpp"

namespace fixture {

inline rankforge::MetricReport report(const std::string& metric, std::vector<double> values) {
  rankforge::MetricReport r{metric, {}, 0.0};
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    r.per_query.emplace("q" + std::to_string(i + 1), values[i]);
  }
  for (const auto& [q, v] : r.per_query) sum += v;
  r.mean = sum / static_cast<double>(values.size());
  return r;
}

inline std::string comparison_markdown() {
  using namespace rankforge;
  const std::vector<TableColumn> columns{{"dev", MetricSpec::ap()}, {"dev", MetricSpec::ndcg()}};
  const SystemReports baseline{"BM25",
                               {report("AP", {0.5, 0.5, 0.5, 0.5, 0.5}),
                                report("nDCG@10", {0.3, 0.3, 0.3, 0.3, 0.3})}};
  const SystemReports x{"X",
                        {report("AP", {0.6, 0.7, 0.6, 0.7, 0.65}),
                         report("nDCG@10", {0.3, 0.3, 0.3, 0.3, 0.4})}};
  const SystemReports y{"Y",
                        {report("AP", {0.4, 0.6, 0.4, 0.55, 0.5}),
                         report("nDCG@10", {0.3, 0.3, 0.3, 0.3, 0.4})}};
  return render_markdown(build_table("Fixture", columns, baseline, {x, y}, {{0, 1}}));
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace fixture
