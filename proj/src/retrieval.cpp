// Copyright 2026 The RankForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "rankforge/retrieval.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "rankforge/error.hpp"

namespace rankforge {
namespace {

// Decodes one UTF-8 code point at `i`, advancing it. Invalid sequences
// decode to 0 (a separator) and consume one byte.
char32_t decode(std::string_view s, std::size_t& i) {
  const auto c0 = static_cast<unsigned char>(s[i]);
  if (c0 < 0x80) {
    ++i;
    return c0;
  }
  int extra = 0;
  char32_t cp = 0;
  if ((c0 & 0xE0) == 0xC0) {
    extra = 1;
    cp = c0 & 0x1F;
  } else if ((c0 & 0xF0) == 0xE0) {
    extra = 2;
    cp = c0 & 0x0F;
  } else if ((c0 & 0xF8) == 0xF0) {
    extra = 3;
    cp = c0 & 0x07;
  } else {
    ++i;
    return 0;
  }
  if (i + extra >= s.size()) {
    ++i;
    return 0;
  }
  for (int k = 1; k <= extra; ++k) {
    const auto c = static_cast<unsigned char>(s[i + k]);
    if ((c & 0xC0) != 0x80) {
      ++i;
      return 0;
    }
    cp = (cp << 6) | (c & 0x3F);
  }
  i += extra + 1;
  return cp;
}

bool is_alnum(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') ||
           (cp >= 'A' && cp <= 'Z');
  }
  if (cp <= 0xBF) return false;                     // C1 controls, Latin-1 symbols
  if (cp == 0xD7 || cp == 0xF7) return false;      // multiplication, division
  if (cp >= 0x2000 && cp <= 0x206F) return false;  // general punctuation
  if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
  if (cp == 0xFEFF || cp == 0xFFFD) return false;
  return true;
}

char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    const char32_t cp = decode(text, i);
    if (is_alnum(cp)) {
      append_utf8(current, to_lower(cp));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

void validate(const Bm25Params& params) {
  if (!(params.k1 > 0.0) || !(params.b >= 0.0 && params.b <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("invalid BM25 parameters k1={} b={}", params.k1, params.b));
  }
}

InvertedIndex InvertedIndex::build(const Corpus& corpus) {
  InvertedIndex index;
  const auto& docs = corpus.documents();
  index.doc_ids_.reserve(docs.size());
  index.doc_len_.reserve(docs.size());
  index.forward_.reserve(docs.size());
  double total_len = 0.0;
  std::unordered_map<std::uint32_t, std::uint32_t> counts;
  for (std::uint32_t ordinal = 0; ordinal < docs.size(); ++ordinal) {
    const Document& doc = docs[ordinal];
    const auto tokens = tokenize(doc.text);
    counts.clear();
    for (const auto& tok : tokens) {
      auto [it, inserted] = index.terms_.emplace(
          tok, static_cast<std::uint32_t>(index.postings_.size()));
      if (inserted) index.postings_.emplace_back();
      ++counts[it->second];
    }
    std::vector<std::pair<std::uint32_t, std::uint32_t>> fwd(counts.begin(), counts.end());
    std::sort(fwd.begin(), fwd.end());
    for (const auto& [term, tf] : fwd) index.postings_[term].push_back({ordinal, tf});
    index.forward_.push_back(std::move(fwd));
    index.doc_ids_.push_back(doc.id);
    index.doc_slot_.emplace(doc.id, ordinal);
    index.doc_len_.push_back(static_cast<std::uint32_t>(tokens.size()));
    total_len += static_cast<double>(tokens.size());
  }
  index.avg_len_ = docs.empty() ? 0.0 : total_len / static_cast<double>(docs.size());
  return index;
}

std::int64_t InvertedIndex::term_id(std::string_view term) const {
  auto it = terms_.find(std::string(term));
  return it == terms_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

std::size_t InvertedIndex::df(std::string_view term) const {
  return postings(term).size();
}

std::span<const Posting> InvertedIndex::postings(std::string_view term) const {
  const auto id = term_id(term);
  if (id < 0) return {};
  return postings_[static_cast<std::size_t>(id)];
}

std::uint32_t InvertedIndex::doc_ordinal(const std::string& doc_id) const {
  auto it = doc_slot_.find(doc_id);
  if (it == doc_slot_.end()) {
    throw Error(ErrorKind::kNotFound, fmt::format("document '{}' is not indexed", doc_id));
  }
  return it->second;
}

std::uint32_t InvertedIndex::tf(std::uint32_t ordinal, std::string_view term) const {
  const auto id = term_id(term);
  if (id < 0) return 0;
  const auto& fwd = forward_[ordinal];
  auto it = std::lower_bound(
      fwd.begin(), fwd.end(), static_cast<std::uint32_t>(id),
      [](const auto& entry, std::uint32_t t) { return entry.first < t; });
  return (it != fwd.end() && it->first == static_cast<std::uint32_t>(id)) ? it->second : 0;
}

double InvertedIndex::idf(std::string_view term) const {
  return bm25_idf(doc_count(), df(term));
}

double bm25_idf(std::size_t doc_count, std::size_t df) {
  const double n = static_cast<double>(doc_count);
  const double d = static_cast<double>(df);
  return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

double bm25_term_weight(double idf, double tf, double doc_len, double avg_len,
                        const Bm25Params& params) {
  const double norm = avg_len > 0.0 ? doc_len / avg_len : 0.0;
  return idf * tf * (params.k1 + 1.0) /
         (tf + params.k1 * (1.0 - params.b + params.b * norm));
}

double bm25_score(const InvertedIndex& index, const Bm25Params& params,
                  std::span<const std::string> query_tokens,
                  const std::string& doc_id) {
  const std::uint32_t ordinal = index.doc_ordinal(doc_id);
  const double len = index.doc_length(ordinal);
  double score = 0.0;
  for (const auto& term : query_tokens) {
    const std::uint32_t tf = index.tf(ordinal, term);
    if (tf == 0) continue;
    score += bm25_term_weight(index.idf(term), tf, len, index.avg_doc_length(), params);
  }
  return score;
}

double bm25_score_tokens(const InvertedIndex& index, const Bm25Params& params,
                         std::span<const std::string> query_tokens,
                         std::span<const std::string> doc_tokens) {
  std::unordered_map<std::string_view, std::uint32_t> counts;
  for (const auto& t : doc_tokens) ++counts[t];
  const double len = static_cast<double>(doc_tokens.size());
  double score = 0.0;
  for (const auto& term : query_tokens) {
    auto it = counts.find(term);
    if (it == counts.end()) continue;
    score += bm25_term_weight(index.idf(term), it->second, len, index.avg_doc_length(), params);
  }
  return score;
}

Ranking retrieve_topk(const InvertedIndex& index, const Bm25Params& params,
                      const Query& query, std::size_t k) {
  if (k == 0) throw Error(ErrorKind::kInvalidArgument, "retrieval depth k must be >= 1");
  const auto tokens = tokenize(query.text);
  // Term-at-a-time accumulation in query-token order, which reproduces the
  // summation order of bm25_score exactly.
  std::unordered_map<std::uint32_t, double> acc;
  for (const auto& term : tokens) {
    const auto list = index.postings(term);
    if (list.empty()) continue;
    const double idf = bm25_idf(index.doc_count(), list.size());
    for (const Posting& p : list) {
      acc[p.doc] += bm25_term_weight(idf, p.tf, index.doc_length(p.doc),
                                     index.avg_doc_length(), params);
    }
  }
  std::vector<std::pair<std::uint32_t, double>> scored(acc.begin(), acc.end());
  auto better = [&](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return index.doc_id(a.first) < index.doc_id(b.first);
  };
  const std::size_t depth = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(depth),
                    scored.end(), better);
  Ranking ranking{query.id, {}};
  ranking.entries.reserve(depth);
  for (std::size_t i = 0; i < depth; ++i) {
    ranking.entries.push_back(
        RankedDoc{index.doc_id(scored[i].first), static_cast<int>(i + 1), scored[i].second});
  }
  return ranking;
}

}  // namespace rankforge
