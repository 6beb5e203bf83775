// Copyright 2026 The RankForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "rankforge/types.hpp"

#include <fmt/format.h>

#include "rankforge/error.hpp"

namespace rankforge {

void Corpus::add(Document doc) {
  if (doc.id.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "document id is empty");
  }
  auto [it, inserted] = by_id_.emplace(doc.id, docs_.size());
  if (!inserted) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("duplicate document id '{}'", doc.id));
  }
  docs_.push_back(std::move(doc));
}

const Document* Corpus::find(const std::string& id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &docs_[it->second];
}

const Document& Corpus::at(const std::string& id) const {
  return docs_[ordinal(id)];
}

std::size_t Corpus::ordinal(const std::string& id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) {
    throw Error(ErrorKind::kNotFound, fmt::format("unknown document '{}'", id));
  }
  return it->second;
}

void validate(const Ranking& ranking) {
  for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
    const RankedDoc& e = ranking.entries[i];
    if (e.rank != static_cast<int>(i + 1)) {
      throw Error(ErrorKind::kInvalidArgument,
                  fmt::format("query '{}': expected rank {} at position {}, got {}",
                              ranking.query_id, i + 1, i + 1, e.rank));
    }
    if (i > 0 && e.score > ranking.entries[i - 1].score) {
      throw Error(ErrorKind::kInvalidArgument,
                  fmt::format("query '{}': score increases from rank {} to {}",
                              ranking.query_id, i, i + 1));
    }
  }
}

void Qrels::add(const std::string& query_id, const std::string& doc_id,
                int grade) {
  if (grade < 0) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("negative grade {} for ({}, {})", grade, query_id,
                            doc_id));
  }
  auto [it, inserted] = by_query_[query_id].emplace(doc_id, grade);
  if (!inserted) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("duplicate judgment for ({}, {})", query_id, doc_id));
  }
  ++count_;
}

std::optional<int> Qrels::grade(const std::string& query_id,
                                const std::string& doc_id) const {
  auto q = by_query_.find(query_id);
  if (q == by_query_.end()) return std::nullopt;
  auto d = q->second.find(doc_id);
  if (d == q->second.end()) return std::nullopt;
  return d->second;
}

const std::map<std::string, int>& Qrels::judgments(
    const std::string& query_id) const {
  static const std::map<std::string, int> kEmpty;
  auto q = by_query_.find(query_id);
  return q == by_query_.end() ? kEmpty : q->second;
}

std::vector<std::string> Qrels::relevant(const std::string& query_id,
                                         int threshold) const {
  std::vector<std::string> out;
  for (const auto& [doc, g] : judgments(query_id)) {
    if (g >= threshold) out.push_back(doc);
  }
  return out;
}

std::vector<std::string> Qrels::query_ids() const {
  std::vector<std::string> out;
  out.reserve(by_query_.size());
  for (const auto& [q, _] : by_query_) out.push_back(q);
  return out;
}

}  // namespace rankforge
