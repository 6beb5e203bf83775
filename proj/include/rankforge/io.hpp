// Copyright 2026 The RankForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rankforge/types.hpp"

namespace rankforge {

// Stream parsers. Each one either returns a complete value or throws
// ParseError carrying the 1-based line number; nothing partial escapes.

/// `doc_id<TAB>text` per line.
Corpus parse_corpus(std::istream& in);
/// `query_id<TAB>text` per line; ids must be unique.
std::vector<Query> parse_queries(std::istream& in);
/// TREC qrels: `qid 0 docid rel`.
Qrels parse_qrels(std::istream& in);
/// TREC run: `qid Q0 docid rank score tag`. One Ranking per distinct qid, in
/// order of first appearance, entries sorted by rank and validated.
std::vector<Ranking> parse_run(std::istream& in);
/// JSONL, one `{"qid": ..., "ranked": [...], "texts": [...]?}` per line.
std::vector<TeacherRanking> parse_teacher(std::istream& in);

/// Writes `qid Q0 docid rank score tag` lines, score with 6 decimals.
void write_run(std::ostream& out, const std::vector<Ranking>& rankings,
               const std::string& tag);
std::string format_run(const std::vector<Ranking>& rankings,
                       const std::string& tag);

void write_queries(std::ostream& out, const std::vector<Query>& queries);
void write_corpus(std::ostream& out, const Corpus& corpus);
void write_qrels(std::ostream& out, const Qrels& qrels);
void write_teacher(std::ostream& out,
                   const std::vector<TeacherRanking>& rankings);

// File wrappers: open `path` (kIo on failure) and prefix parse errors with it.
Corpus load_corpus(const std::filesystem::path& path);
std::vector<Query> load_queries(const std::filesystem::path& path);
Qrels load_qrels(const std::filesystem::path& path);
std::vector<Ranking> load_run(const std::filesystem::path& path);
std::vector<TeacherRanking> load_teacher(const std::filesystem::path& path);

/// Writes `contents` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path& path,
                     const std::string& contents);

}  // namespace rankforge
