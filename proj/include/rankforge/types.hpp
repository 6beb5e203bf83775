// Copyright 2026 The RankForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace rankforge {

struct Query {
  std::string id;
  std::string text;
};

struct Document {
  std::string id;
  std::string text;
};

/// Id-indexed document collection. Iteration order is insertion order.
class Corpus {
 public:
  /// Throws on an empty or duplicate id.
  void add(Document doc);

  const Document* find(const std::string& id) const;
  /// Throws kNotFound for an unknown id.
  const Document& at(const std::string& id) const;
  /// Position of `id` in insertion order; throws kNotFound.
  std::size_t ordinal(const std::string& id) const;

  std::size_t size() const { return docs_.size(); }
  bool empty() const { return docs_.empty(); }
  const std::vector<Document>& documents() const { return docs_; }

 private:
  std::vector<Document> docs_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

struct RankedDoc {
  std::string doc_id;
  int rank = 0;  // 1-based
  double score = 0.0;

  friend bool operator==(const RankedDoc&, const RankedDoc&) = default;
};

/// Ordered top-k list for one query. A valid ranking has ranks 1..k in
/// order and scores that never increase with rank.
struct Ranking {
  std::string query_id;
  std::vector<RankedDoc> entries;

  std::size_t depth() const { return entries.size(); }

  friend bool operator==(const Ranking&, const Ranking&) = default;
};

/// Throws kInvalidArgument describing the first violated invariant.
void validate(const Ranking& ranking);

/// Graded relevance judgments keyed by (query, document).
class Qrels {
 public:
  /// Throws on a negative grade or on a second judgment for the same pair.
  void add(const std::string& query_id, const std::string& doc_id, int grade);

  std::optional<int> grade(const std::string& query_id,
                           const std::string& doc_id) const;

  /// Judgments for one query, sorted by doc id. Empty when unjudged.
  const std::map<std::string, int>& judgments(const std::string& query_id) const;

  /// Doc ids with grade >= `threshold`, sorted.
  std::vector<std::string> relevant(const std::string& query_id,
                                    int threshold = 1) const;

  std::vector<std::string> query_ids() const;
  std::size_t size() const { return count_; }

 private:
  std::map<std::string, std::map<std::string, int>> by_query_;
  std::size_t count_ = 0;
};

struct TeacherRanking {
  std::string query_id;
  std::vector<std::string> doc_ids;  // best first
  std::vector<std::string> texts;    // empty, or aligned with doc_ids
};

/// One contrastive training group: a positive and its sampled negatives.
struct ContrastiveInstance {
  std::string query_id;
  std::string positive_id;
  std::vector<std::string> negatives;

  friend bool operator==(const ContrastiveInstance&,
                         const ContrastiveInstance&) = default;
};

}  // namespace rankforge
