// Copyright 2026 The RankForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rankforge/types.hpp"

namespace rankforge {

/// Lowercased maximal runs of alphanumeric code points. ASCII letters and
/// digits are alphanumeric; non-ASCII code points count as letters except
/// for the Latin-1 symbol block, general punctuation, and CJK punctuation.
std::vector<std::string> tokenize(std::string_view text);

struct Bm25Params {
  double k1 = 0.9;
  double b = 0.4;
};

/// Throws kInvalidArgument unless k1 > 0 and 0 <= b <= 1.
void validate(const Bm25Params& params);

struct Posting {
  std::uint32_t doc = 0;  // corpus ordinal
  std::uint32_t tf = 0;
};

/// Immutable term-to-postings index over a corpus, with the per-document
/// statistics BM25 needs. Safe to share across threads once built.
class InvertedIndex {
 public:
  static InvertedIndex build(const Corpus& corpus);

  std::size_t doc_count() const { return doc_ids_.size(); }
  std::size_t term_count() const { return postings_.size(); }
  double avg_doc_length() const { return avg_len_; }

  /// -1 when the term is not in the vocabulary.
  std::int64_t term_id(std::string_view term) const;
  std::size_t df(std::string_view term) const;
  std::span<const Posting> postings(std::string_view term) const;
  std::span<const Posting> postings(std::uint32_t term_id) const {
    return postings_[term_id];
  }

  /// Throws kNotFound for an unknown doc id.
  std::uint32_t doc_ordinal(const std::string& doc_id) const;
  const std::string& doc_id(std::uint32_t ordinal) const { return doc_ids_[ordinal]; }
  std::uint32_t doc_length(std::uint32_t ordinal) const { return doc_len_[ordinal]; }
  /// Term frequency of `term` in document `ordinal`, 0 when absent.
  std::uint32_t tf(std::uint32_t ordinal, std::string_view term) const;

  /// Lucene-style idf: ln(1 + (N - df + 0.5) / (df + 0.5)).
  double idf(std::string_view term) const;

 private:
  std::unordered_map<std::string, std::uint32_t> terms_;
  std::vector<std::vector<Posting>> postings_;
  // Per document: (term id, tf) sorted by term id.
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> forward_;
  std::vector<std::string> doc_ids_;
  std::unordered_map<std::string, std::uint32_t> doc_slot_;
  std::vector<std::uint32_t> doc_len_;
  double avg_len_ = 0.0;
};

double bm25_idf(std::size_t doc_count, std::size_t df);

/// Contribution of one query-term occurrence with the given statistics.
double bm25_term_weight(double idf, double tf, double doc_len, double avg_len,
                        const Bm25Params& params);

/// Sum over query tokens (each occurrence counted) of the BM25 term weight.
/// Throws kNotFound when `doc_id` is not indexed.
double bm25_score(const InvertedIndex& index, const Bm25Params& params,
                  std::span<const std::string> query_tokens,
                  const std::string& doc_id);

/// BM25 of an arbitrary tokenized document against the index statistics
/// (N, df, average length). Equals bm25_score for an indexed document.
double bm25_score_tokens(const InvertedIndex& index, const Bm25Params& params,
                         std::span<const std::string> query_tokens,
                         std::span<const std::string> doc_tokens);

/// Top-k documents sharing at least one term with the query, by descending
/// BM25 and ascending doc id on ties. Throws when k == 0.
Ranking retrieve_topk(const InvertedIndex& index, const Bm25Params& params,
                      const Query& query, std::size_t k);

}  // namespace rankforge
