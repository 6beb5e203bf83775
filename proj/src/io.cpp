// Copyright 2026 The RankForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "rankforge/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include "rankforge/error.hpp"

namespace rankforge {
namespace {

// Reads lines, stripping a trailing '\r'. Returns false at end of stream.
bool next_line(std::istream& in, std::string& line, std::size_t& line_no) {
  if (!std::getline(in, line)) return false;
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) fields.push_back(s.substr(i, j - i));
    i = j;
  }
  return fields;
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return c == ' ' || c == '\t'; });
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

// `id<TAB>text` lines shared by corpus and query files.
template <typename Fn>
void parse_tsv(std::istream& in, const char* what, Fn&& emit) {
  std::string line;
  std::size_t line_no = 0;
  while (next_line(in, line, line_no)) {
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError(line_no, fmt::format("malformed {} line: missing tab", what));
    }
    if (tab == 0) {
      throw ParseError(line_no, fmt::format("malformed {} line: empty id", what));
    }
    emit(line_no, line.substr(0, tab), line.substr(tab + 1));
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kIo, fmt::format("cannot open '{}'", path.string()));
  }
  return in;
}

template <typename Fn>
auto load_with_context(const std::filesystem::path& path, Fn&& parse) {
  auto in = open_input(path);
  try {
    return parse(in);
  } catch (const ParseError& e) {
    throw ParseError(0, fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace

Corpus parse_corpus(std::istream& in) {
  Corpus corpus;
  parse_tsv(in, "corpus", [&](std::size_t line_no, std::string id, std::string text) {
    if (corpus.find(id) != nullptr) {
      throw ParseError(line_no, fmt::format("duplicate document id '{}'", id));
    }
    corpus.add(Document{std::move(id), std::move(text)});
  });
  return corpus;
}

std::vector<Query> parse_queries(std::istream& in) {
  std::vector<Query> queries;
  std::unordered_set<std::string> seen;
  parse_tsv(in, "query", [&](std::size_t line_no, std::string id, std::string text) {
    if (!seen.insert(id).second) {
      throw ParseError(line_no, fmt::format("duplicate query id '{}'", id));
    }
    queries.push_back(Query{std::move(id), std::move(text)});
  });
  return queries;
}

Qrels parse_qrels(std::istream& in) {
  Qrels qrels;
  std::string line;
  std::size_t line_no = 0;
  while (next_line(in, line, line_no)) {
    if (is_blank(line)) continue;
    const auto f = split_ws(line);
    if (f.size() != 4) {
      throw ParseError(line_no,
                       fmt::format("expected 4 qrels fields, got {}", f.size()));
    }
    int grade = 0;
    if (!parse_number(f[3], grade)) {
      throw ParseError(line_no, fmt::format("non-integer relevance '{}'", f[3]));
    }
    if (grade < 0) {
      throw ParseError(line_no, fmt::format("negative relevance {}", grade));
    }
    const std::string qid(f[0]), did(f[2]);
    if (qrels.grade(qid, did).has_value()) {
      throw ParseError(line_no,
                       fmt::format("duplicate judgment for ({}, {})", qid, did));
    }
    qrels.add(qid, did, grade);
  }
  return qrels;
}

std::vector<Ranking> parse_run(std::istream& in) {
  std::vector<Ranking> rankings;
  std::unordered_map<std::string, std::size_t> slot;
  std::unordered_map<std::string, std::unordered_set<std::string>> docs_seen;
  std::string line;
  std::size_t line_no = 0;
  while (next_line(in, line, line_no)) {
    if (is_blank(line)) continue;
    const auto f = split_ws(line);
    if (f.size() != 6) {
      throw ParseError(line_no,
                       fmt::format("expected 6 run fields, got {}", f.size()));
    }
    RankedDoc entry;
    entry.doc_id = std::string(f[2]);
    if (!parse_number(f[3], entry.rank) || entry.rank < 1) {
      throw ParseError(line_no, fmt::format("invalid rank '{}'", f[3]));
    }
    if (!parse_number(f[4], entry.score) || !std::isfinite(entry.score)) {
      throw ParseError(line_no, fmt::format("invalid score '{}'", f[4]));
    }
    const std::string qid(f[0]);
    auto [it, inserted] = slot.emplace(qid, rankings.size());
    if (inserted) rankings.push_back(Ranking{qid, {}});
    if (!docs_seen[qid].insert(entry.doc_id).second) {
      throw ParseError(line_no, fmt::format("duplicate document '{}' for query '{}'",
                                            entry.doc_id, qid));
    }
    rankings[it->second].entries.push_back(std::move(entry));
  }
  for (Ranking& r : rankings) {
    std::stable_sort(r.entries.begin(), r.entries.end(),
                     [](const RankedDoc& a, const RankedDoc& b) { return a.rank < b.rank; });
    for (std::size_t i = 0; i < r.entries.size(); ++i) {
      if (r.entries[i].rank != static_cast<int>(i + 1)) {
        throw ParseError(0, fmt::format("query '{}': rank sequence has a gap or "
                                        "duplicate at rank {}",
                                        r.query_id, i + 1));
      }
      if (i > 0 && r.entries[i].score > r.entries[i - 1].score) {
        throw ParseError(0, fmt::format("query '{}': score increases from rank {} "
                                        "to rank {}",
                                        r.query_id, i, i + 1));
      }
    }
  }
  return rankings;
}

std::vector<TeacherRanking> parse_teacher(std::istream& in) {
  std::vector<TeacherRanking> out;
  std::string line;
  std::size_t line_no = 0;
  while (next_line(in, line, line_no)) {
    if (is_blank(line)) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(line_no, fmt::format("invalid JSON: {}", e.what()));
    }
    if (!j.is_object() || !j.contains("qid") || !j["qid"].is_string() ||
        !j.contains("ranked") || !j["ranked"].is_array()) {
      throw ParseError(line_no, "expected object with string 'qid' and array 'ranked'");
    }
    TeacherRanking t;
    t.query_id = j["qid"].get<std::string>();
    std::unordered_set<std::string> seen;
    for (const auto& d : j["ranked"]) {
      if (!d.is_string()) {
        throw ParseError(line_no, fmt::format("query '{}': non-string doc id", t.query_id));
      }
      auto id = d.get<std::string>();
      if (!seen.insert(id).second) {
        throw ParseError(line_no, fmt::format("query '{}': duplicate document '{}'",
                                              t.query_id, id));
      }
      t.doc_ids.push_back(std::move(id));
    }
    if (t.doc_ids.size() < 2) {
      throw ParseError(line_no, fmt::format("query '{}': teacher ranking needs at "
                                            "least 2 documents, got {}",
                                            t.query_id, t.doc_ids.size()));
    }
    if (j.contains("texts")) {
      const auto& texts = j["texts"];
      if (!texts.is_array() || texts.size() != t.doc_ids.size()) {
        throw ParseError(line_no, fmt::format("query '{}': 'texts' must be an array "
                                              "aligned with 'ranked'",
                                              t.query_id));
      }
      for (const auto& x : texts) {
        if (!x.is_string()) {
          throw ParseError(line_no, fmt::format("query '{}': non-string text", t.query_id));
        }
        t.texts.push_back(x.get<std::string>());
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

void write_run(std::ostream& out, const std::vector<Ranking>& rankings,
               const std::string& tag) {
  out << format_run(rankings, tag);
}

std::string format_run(const std::vector<Ranking>& rankings,
                       const std::string& tag) {
  fmt::memory_buffer buf;
  for (const Ranking& r : rankings) {
    validate(r);
    for (const RankedDoc& e : r.entries) {
      fmt::format_to(std::back_inserter(buf), "{} Q0 {} {} {:.6f} {}\n",
                     r.query_id, e.doc_id, e.rank, e.score, tag);
    }
  }
  return fmt::to_string(buf);
}

void write_queries(std::ostream& out, const std::vector<Query>& queries) {
  for (const Query& q : queries) out << q.id << '\t' << q.text << '\n';
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const Document& d : corpus.documents()) out << d.id << '\t' << d.text << '\n';
}

void write_qrels(std::ostream& out, const Qrels& qrels) {
  for (const auto& qid : qrels.query_ids()) {
    for (const auto& [doc, grade] : qrels.judgments(qid)) {
      out << qid << " 0 " << doc << ' ' << grade << '\n';
    }
  }
}

void write_teacher(std::ostream& out,
                   const std::vector<TeacherRanking>& rankings) {
  for (const TeacherRanking& t : rankings) {
    nlohmann::json j;
    j["qid"] = t.query_id;
    j["ranked"] = t.doc_ids;
    if (!t.texts.empty()) j["texts"] = t.texts;
    out << j.dump() << '\n';
  }
}

Corpus load_corpus(const std::filesystem::path& path) {
  return load_with_context(path, [](std::istream& in) { return parse_corpus(in); });
}

std::vector<Query> load_queries(const std::filesystem::path& path) {
  return load_with_context(path, [](std::istream& in) { return parse_queries(in); });
}

Qrels load_qrels(const std::filesystem::path& path) {
  return load_with_context(path, [](std::istream& in) { return parse_qrels(in); });
}

std::vector<Ranking> load_run(const std::filesystem::path& path) {
  return load_with_context(path, [](std::istream& in) { return parse_run(in); });
}

std::vector<TeacherRanking> load_teacher(const std::filesystem::path& path) {
  return load_with_context(path, [](std::istream& in) { return parse_teacher(in); });
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorKind::kIo, fmt::format("cannot write '{}'", path.string()));
  }
  out << contents;
  if (!out) {
    throw Error(ErrorKind::kIo, fmt::format("write failed for '{}'", path.string()));
  }
}

}  // namespace rankforge
