// Copyright 2026 The RankForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "rankforge/types.hpp"

namespace rankforge {

/// Shape of a synthetic topical retrieval benchmark.
///
/// The vocabulary is split into `topics` disjoint blocks with a Zipfian
/// token distribution inside each block. A document draws 20-60 tokens from
/// a mixture that puts share s = u^3 (u uniform) on its primary topic and
/// spreads the rest evenly over the other topics; a query draws 3-6 distinct
/// tokens from the most frequent tenth of a single topic block. The grade of a document for a query is the
/// quantized share of the query topic in the document mixture (>= 0.75 -> 3,
/// >= 0.5 -> 2, >= 0.25 -> 1). The teacher orders each training query's
/// judged documents by grade plus N(0, teacher_noise^2), ties by doc id,
/// and keeps the top `teacher_depth`.
struct SynthSpec {
  std::size_t vocabulary = 5000;
  std::size_t topics = 20;
  std::size_t docs_per_topic = 100;
  std::size_t queries = 250;       // total
  std::size_t eval_queries = 50;   // held out from training; the rest train
  double teacher_noise = 0.5;
  std::size_t teacher_depth = 20;
  std::uint64_t seed = 42;
};

/// Throws kInvalidArgument on a count of zero, a vocabulary smaller than
/// the topic count, negative noise, or eval_queries >= queries.
void validate(const SynthSpec& spec);

struct SynthData {
  Corpus corpus;
  std::vector<Query> train_queries;
  std::vector<Query> eval_queries;
  Qrels qrels;                          // all grade >= 1 judgments
  std::vector<TeacherRanking> teacher;  // training queries only
};

SynthData generate_synthetic(const SynthSpec& spec);

/// Writes corpus.tsv, queries.tsv (training queries), eval_queries.tsv,
/// qrels.txt and teacher.jsonl into `dir`.
void write_synthetic(const SynthData& data, const std::filesystem::path& dir);

}  // namespace rankforge
