// Copyright 2026 The RankForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "rankforge/sampling.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "rankforge/error.hpp"
#include "rankforge/rng.hpp"

namespace rankforge {
namespace {

// Distinct stream tags so hard and random draws never share a substream.
constexpr std::uint64_t kHardStream = 0x68617264;  // "hard"
constexpr std::uint64_t kRandomStream = 0x72616e64;  // "rand"

}  // namespace

void validate(const SamplerConfig& config) {
  if (config.negatives < 1) {
    throw Error(ErrorKind::kInvalidArgument, "sampler needs at least one negative");
  }
  if (config.pool_depth < config.negatives) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("pool depth {} is smaller than negative count {}",
                            config.pool_depth, config.negatives));
  }
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k > n) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("cannot sample {} of {} items", k, n));
  }
  SplitMix64 rng(seed);
  std::vector<std::size_t> out;
  out.reserve(k);
  if (2 * k <= n) {
    // Sparse Fisher-Yates: only displaced slots are stored.
    std::unordered_map<std::size_t, std::size_t> swapped;
    auto at = [&](std::size_t i) {
      auto it = swapped.find(i);
      return it == swapped.end() ? i : it->second;
    };
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + rng.below(n - i);
      const std::size_t vi = at(i), vj = at(j);
      swapped[j] = vi;
      out.push_back(vj);
    }
  } else {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + rng.below(n - i);
      std::swap(perm[i], perm[j]);
      out.push_back(perm[i]);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

ContrastiveInstance sample_hard(const Ranking& ranking, const std::string& positive_id,
                                const SamplerConfig& config, std::uint64_t query_ordinal,
                                std::uint64_t epoch) {
  validate(config);
  const std::size_t pool = std::min(ranking.depth(), config.pool_depth);
  std::vector<const std::string*> eligible;
  eligible.reserve(pool);
  for (std::size_t i = 0; i < pool; ++i) {
    if (ranking.entries[i].doc_id != positive_id) eligible.push_back(&ranking.entries[i].doc_id);
  }
  if (eligible.size() < config.negatives) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("query '{}': only {} hard-negative candidates for {} negatives",
                            ranking.query_id, eligible.size(), config.negatives));
  }
  const auto picks = sample_indices(
      eligible.size(), config.negatives,
      substream_seed(config.seed, {kHardStream, epoch, query_ordinal}));
  ContrastiveInstance inst{ranking.query_id, positive_id, {}};
  inst.negatives.reserve(picks.size());
  for (std::size_t i : picks) inst.negatives.push_back(*eligible[i]);
  return inst;
}

ContrastiveInstance sample_random(const Corpus& corpus, const std::string& query_id,
                                  const std::string& positive_id,
                                  const SamplerConfig& config, std::uint64_t query_ordinal,
                                  std::uint64_t epoch) {
  if (config.negatives < 1) {
    throw Error(ErrorKind::kInvalidArgument, "sampler needs at least one negative");
  }
  const bool has_positive = corpus.find(positive_id) != nullptr;
  const std::size_t eligible = corpus.size() - (has_positive ? 1 : 0);
  if (eligible < config.negatives) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("query '{}': corpus of {} documents is too small for {} "
                            "random negatives",
                            query_id, corpus.size(), config.negatives));
  }
  const std::size_t skip = has_positive ? corpus.ordinal(positive_id) : corpus.size();
  const auto picks = sample_indices(
      eligible, config.negatives,
      substream_seed(config.seed, {kRandomStream, epoch, query_ordinal}));
  ContrastiveInstance inst{query_id, positive_id, {}};
  inst.negatives.reserve(picks.size());
  const auto& docs = corpus.documents();
  for (std::size_t i : picks) inst.negatives.push_back(docs[i >= skip ? i + 1 : i].id);
  return inst;
}

}  // namespace rankforge
