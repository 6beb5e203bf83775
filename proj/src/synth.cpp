// Copyright 2026 The RankForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "rankforge/synth.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "rankforge/error.hpp"
#include "rankforge/io.hpp"
#include "rankforge/rng.hpp"

namespace rankforge {
namespace {

constexpr double kZipfExponent = 0.9;

// Cumulative Zipf weights over one topic block, for inverse-CDF draws.
class TopicSampler {
 public:
  explicit TopicSampler(std::size_t block) : cdf_(block) {
    double total = 0.0;
    for (std::size_t r = 0; r < block; ++r) {
      total += 1.0 / std::pow(static_cast<double>(r + 1), kZipfExponent);
      cdf_[r] = total;
    }
    for (double& c : cdf_) c /= total;
  }

  std::size_t draw(SplitMix64& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

int grade_for_share(double share) {
  if (share >= 0.75) return 3;
  if (share >= 0.5) return 2;
  if (share >= 0.25) return 1;
  return 0;
}

}  // namespace

void validate(const SynthSpec& spec) {
  if (spec.vocabulary == 0 || spec.topics == 0 || spec.docs_per_topic == 0 || spec.queries == 0 ||
      spec.teacher_depth < 2) {
    throw Error(ErrorKind::kInvalidArgument, "synthetic spec counts must be >= 1 (teacher depth >= 2)");
  }
  if (spec.vocabulary < spec.topics) {
    throw Error(ErrorKind::kInvalidArgument, "vocabulary must be at least the topic count");
  }
  if (spec.eval_queries >= spec.queries) {
    throw Error(ErrorKind::kInvalidArgument, "eval_queries must leave at least one training query");
  }
  if (!(spec.teacher_noise >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "teacher noise must be >= 0");
  }
}

SynthData generate_synthetic(const SynthSpec& spec) {
  validate(spec);
  SplitMix64 rng(spec.seed);
  const std::size_t block = spec.vocabulary / spec.topics;
  const TopicSampler sampler(block);
  auto token = [&](std::size_t topic, std::size_t r) {
    return fmt::format("w{}", topic * block + r);
  };

  SynthData data;
  const std::size_t n_docs = spec.topics * spec.docs_per_topic;
  std::vector<double> primary_share(n_docs);
  for (std::size_t i = 0; i < n_docs; ++i) {
    const std::size_t topic = i % spec.topics;
    // Skewed towards small shares so highly relevant documents are rare:
    // P(share >= 0.75) ~ 0.09, P(>= 0.5) ~ 0.21, P(>= 0.25) ~ 0.37.
    const double u = rng.uniform();
    const double share = spec.topics == 1 ? 1.0 : u * u * u;
    primary_share[i] = share;
    const std::size_t length = 20 + rng.below(41);
    std::string text;
    for (std::size_t w = 0; w < length; ++w) {
      std::size_t t = topic;
      if (rng.uniform() >= share) {
        // Background mass is spread evenly over the other topics.
        t = rng.below(spec.topics - 1);
        if (t >= topic) ++t;
      }
      if (!text.empty()) text.push_back(' ');
      text += token(t, sampler.draw(rng));
    }
    data.corpus.add(Document{fmt::format("d{:05d}", i), std::move(text)});
  }

  // Query terms come from the head of the topic block so every query matches
  // a deep enough candidate pool.
  const TopicSampler query_sampler(std::max<std::size_t>(1, block / 10));
  std::vector<std::size_t> query_topic(spec.queries);
  for (std::size_t q = 0; q < spec.queries; ++q) {
    query_topic[q] = rng.below(spec.topics);
    const std::size_t len = 3 + rng.below(4);
    std::vector<std::size_t> picked;
    std::size_t guard = 0;
    while (picked.size() < std::min(len, std::max<std::size_t>(1, block / 10)) && guard++ < 10000) {
      const std::size_t r = query_sampler.draw(rng);
      if (std::find(picked.begin(), picked.end(), r) == picked.end()) picked.push_back(r);
    }
    std::string text;
    for (std::size_t r : picked) {
      if (!text.empty()) text.push_back(' ');
      text += token(query_topic[q], r);
    }
    Query query{fmt::format("q{:04d}", q), std::move(text)};
    if (q < spec.queries - spec.eval_queries) {
      data.train_queries.push_back(std::move(query));
    } else {
      data.eval_queries.push_back(std::move(query));
    }
  }

  auto query_at = [&](std::size_t q) -> const Query& {
    const std::size_t n_train = data.train_queries.size();
    return q < n_train ? data.train_queries[q] : data.eval_queries[q - n_train];
  };
  for (std::size_t q = 0; q < spec.queries; ++q) {
    std::size_t judged = 0;
    for (std::size_t i = 0; i < n_docs; ++i) {
      const std::size_t topic = i % spec.topics;
      const double share = topic == query_topic[q]
                               ? primary_share[i]
                               : (1.0 - primary_share[i]) / static_cast<double>(spec.topics - 1);
      const int grade = grade_for_share(share);
      if (grade > 0) {
        data.qrels.add(query_at(q).id, data.corpus.documents()[i].id, grade);
        ++judged;
      }
    }
    if (judged == 0) {
      // Guarantee at least one relevant document: promote the query topic's
      // document with the largest share to grade 1.
      std::size_t best = query_topic[q];
      for (std::size_t i = query_topic[q]; i < n_docs; i += spec.topics) {
        if (primary_share[i] > primary_share[best]) best = i;
      }
      data.qrels.add(query_at(q).id, data.corpus.documents()[best].id, 1);
    }
  }

  for (const Query& q : data.train_queries) {
    struct Noisy {
      double key;
      const std::string* doc;
    };
    std::vector<Noisy> judged;
    for (const auto& [doc, grade] : data.qrels.judgments(q.id)) {
      const double noise = spec.teacher_noise > 0.0 ? spec.teacher_noise * rng.normal() : 0.0;
      judged.push_back({static_cast<double>(grade) + noise, &doc});
    }
    std::sort(judged.begin(), judged.end(), [](const Noisy& a, const Noisy& b) {
      if (a.key != b.key) return a.key > b.key;
      return *a.doc < *b.doc;
    });
    if (judged.size() < 2) continue;
    TeacherRanking t{q.id, {}, {}};
    for (std::size_t i = 0; i < std::min(spec.teacher_depth, judged.size()); ++i) {
      t.doc_ids.push_back(*judged[i].doc);
    }
    data.teacher.push_back(std::move(t));
  }
  return data;
}

void write_synthetic(const SynthData& data, const std::filesystem::path& dir) {
  std::ostringstream corpus, train, eval, qrels, teacher;
  write_corpus(corpus, data.corpus);
  write_queries(train, data.train_queries);
  write_queries(eval, data.eval_queries);
  write_qrels(qrels, data.qrels);
  write_teacher(teacher, data.teacher);
  write_text_file(dir / "corpus.tsv", corpus.str());
  write_text_file(dir / "queries.tsv", train.str());
  write_text_file(dir / "eval_queries.tsv", eval.str());
  write_text_file(dir / "qrels.txt", qrels.str());
  write_text_file(dir / "teacher.jsonl", teacher.str());
}

}  // namespace rankforge
