// Copyright 2026 The RankForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rankforge/types.hpp"

namespace rankforge {

enum class NegativePolicy { kHard, kRandom };

struct SamplerConfig {
  std::size_t negatives = 99;    // h
  std::size_t pool_depth = 200;  // hard negatives come from this prefix
  NegativePolicy policy = NegativePolicy::kHard;
  std::uint64_t seed = 0;
};

/// Throws kInvalidArgument unless negatives >= 1 and pool_depth >= negatives.
void validate(const SamplerConfig& config);

/// Uniform draw of `config.negatives` documents, without replacement, from
/// the top `pool_depth` entries of `ranking` excluding `positive_id`.
/// Negatives are returned in first-stage rank order. The draw depends only
/// on (seed, epoch, query_ordinal).
ContrastiveInstance sample_hard(const Ranking& ranking, const std::string& positive_id,
                                const SamplerConfig& config, std::uint64_t query_ordinal,
                                std::uint64_t epoch);

/// Same contract as sample_hard with the whole corpus as the pool.
/// Negatives are returned in corpus order.
ContrastiveInstance sample_random(const Corpus& corpus, const std::string& query_id,
                                  const std::string& positive_id,
                                  const SamplerConfig& config, std::uint64_t query_ordinal,
                                  std::uint64_t epoch);

/// Uniform k-subset of [0, n) via partial Fisher-Yates on a substream,
/// returned sorted ascending.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed);

}  // namespace rankforge
