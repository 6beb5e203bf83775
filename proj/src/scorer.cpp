// Copyright 2026 The RankForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "rankforge/scorer.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "rankforge/error.hpp"
#include "rankforge/rng.hpp"

namespace rankforge {
namespace {

constexpr char kMagic[4] = {'R', 'F', 'C', 'K'};
constexpr double kIdfEpsilon = 1e-12;

void check_dim(const ScorerParams& params, std::size_t dim) {
  if (dim != params.input_dim()) {
    throw Error(ErrorKind::kMismatch,
                fmt::format("feature dimension {} does not match scorer input {}", dim,
                            params.input_dim()));
  }
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(bytes, 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
    throw ParseError(0, "checkpoint is truncated");
  }
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}

}  // namespace

SparseFeatures SparseFeatures::from_dense(const FeatureVector& x) {
  SparseFeatures s;
  s.dim = x.dim();
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    if (x.values[i] != 0.0) {
      s.index.push_back(static_cast<std::uint32_t>(i));
      s.value.push_back(x.values[i]);
    }
  }
  return s;
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

FeatureVector extract_features(const InvertedIndex& index, const Bm25Params& params,
                               const Query& query, const Document& doc,
                               std::size_t buckets) {
  const auto tokens = tokenize(query.text);
  return extract_features(index, params, tokens, doc, buckets);
}

FeatureVector extract_features(const InvertedIndex& index, const Bm25Params& params,
                               std::span<const std::string> query_tokens,
                               const Document& doc, std::size_t buckets) {
  if (buckets == 0) throw Error(ErrorKind::kInvalidArgument, "bucket count must be >= 1");
  FeatureVector x;
  x.values.assign(buckets + kDenseFeatures, 0.0);

  const auto doc_tokens = tokenize(doc.text);
  const std::unordered_set<std::string> doc_terms(doc_tokens.begin(), doc_tokens.end());

  // Unique query terms in first-occurrence order, so sums run in a fixed order.
  std::vector<std::string> unique_q;
  {
    std::unordered_set<std::string> seen;
    for (const auto& t : query_tokens) {
      if (seen.insert(t).second) unique_q.push_back(t);
    }
  }

  std::size_t matched = 0;
  double idf_matched = 0.0;
  double idf_total = 0.0;
  for (const auto& t : unique_q) {
    const double idf = index.idf(t);
    idf_total += idf;
    if (doc_terms.count(t) != 0) {
      ++matched;
      idf_matched += idf;
      x.values[fnv1a64(t) % buckets] += idf;
    }
  }
  double norm2 = 0.0;
  for (std::size_t i = 0; i < buckets; ++i) norm2 += x.values[i] * x.values[i];
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t i = 0; i < buckets; ++i) x.values[i] *= inv;
  }

  const double bm25 = bm25_score_tokens(index, params, query_tokens, doc_tokens);
  std::size_t bigrams = 0;
  std::size_t bigram_hits = 0;
  if (query_tokens.size() >= 2) {
    std::unordered_set<std::string> doc_bigrams;
    for (std::size_t i = 0; i + 1 < doc_tokens.size(); ++i) {
      doc_bigrams.insert(doc_tokens[i] + ' ' + doc_tokens[i + 1]);
    }
    for (std::size_t i = 0; i + 1 < query_tokens.size(); ++i) {
      ++bigrams;
      if (doc_bigrams.count(query_tokens[i] + ' ' + query_tokens[i + 1]) != 0) ++bigram_hits;
    }
  }

  double* dense = x.values.data() + buckets;
  dense[0] = bm25 / (1.0 + bm25);
  dense[1] = static_cast<double>(matched) /
             static_cast<double>(std::max<std::size_t>(1, unique_q.size()));
  dense[2] = idf_matched / std::max(kIdfEpsilon, idf_total);
  dense[3] = std::log(1.0 + static_cast<double>(doc_tokens.size())) / 10.0;
  dense[4] = std::log(1.0 + static_cast<double>(query_tokens.size())) / 10.0;
  dense[5] = bigrams == 0 ? 0.0
                          : static_cast<double>(bigram_hits) / static_cast<double>(bigrams);
  return x;
}

ScorerParams::ScorerParams(std::size_t buckets, std::size_t hidden)
    : buckets_(buckets), hidden_(hidden) {
  if (buckets == 0 || hidden == 0) {
    throw Error(ErrorKind::kInvalidArgument, "scorer needs buckets >= 1 and hidden >= 1");
  }
  values_.assign(hidden * (buckets + kDenseFeatures) + 2 * hidden + 1, 0.0);
}

void ScorerParams::set_zero() { std::fill(values_.begin(), values_.end(), 0.0); }

ScorerParams init_params(const ScorerConfig& config) {
  ScorerParams p(config.buckets, config.hidden);
  SplitMix64 rng(config.seed);
  const double fan_in = static_cast<double>(p.input_dim());
  const double fan_out = static_cast<double>(p.hidden());
  const double bound1 = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& w : p.w1()) w = bound1 * (2.0 * rng.uniform() - 1.0);
  const double bound2 = std::sqrt(6.0 / (fan_out + 1.0));
  for (double& w : p.w2()) w = bound2 * (2.0 * rng.uniform() - 1.0);
  return p;
}

double score(const ScorerParams& params, std::span<const double> x) {
  check_dim(params, x.size());
  const std::size_t dim = params.input_dim();
  const auto w1 = params.w1();
  const auto b1 = params.b1();
  const auto w2 = params.w2();
  double s = params.b2();
  for (std::size_t j = 0; j < params.hidden(); ++j) {
    double pre = b1[j];
    const double* row = w1.data() + j * dim;
    for (std::size_t k = 0; k < dim; ++k) {
      if (x[k] != 0.0) pre += row[k] * x[k];
    }
    s += w2[j] * std::tanh(pre);
  }
  return s;
}

double score(const ScorerParams& params, const SparseFeatures& x) {
  check_dim(params, x.dim);
  const std::size_t dim = params.input_dim();
  const auto w1 = params.w1();
  const auto b1 = params.b1();
  const auto w2 = params.w2();
  double s = params.b2();
  for (std::size_t j = 0; j < params.hidden(); ++j) {
    double pre = b1[j];
    const double* row = w1.data() + j * dim;
    for (std::size_t n = 0; n < x.index.size(); ++n) pre += row[x.index[n]] * x.value[n];
    s += w2[j] * std::tanh(pre);
  }
  return s;
}

ScorerParams score_backward(const ScorerParams& params, std::span<const double> x,
                            double upstream) {
  check_dim(params, x.size());
  FeatureVector dense{std::vector<double>(x.begin(), x.end())};
  ScorerParams grad(params.buckets(), params.hidden());
  accumulate_backward(params, SparseFeatures::from_dense(dense), upstream, grad);
  return grad;
}

void accumulate_backward(const ScorerParams& params, const SparseFeatures& x,
                         double upstream, ScorerParams& grad) {
  check_dim(params, x.dim);
  if (!grad.same_shape(params)) {
    throw Error(ErrorKind::kMismatch, "gradient shape does not match parameters");
  }
  const std::size_t dim = params.input_dim();
  const auto w1 = params.w1();
  const auto b1 = params.b1();
  const auto w2 = params.w2();
  auto gw1 = grad.w1();
  auto gb1 = grad.b1();
  auto gw2 = grad.w2();
  for (std::size_t j = 0; j < params.hidden(); ++j) {
    double pre = b1[j];
    const double* row = w1.data() + j * dim;
    for (std::size_t n = 0; n < x.index.size(); ++n) pre += row[x.index[n]] * x.value[n];
    const double h = std::tanh(pre);
    gw2[j] += upstream * h;
    const double delta = upstream * w2[j] * (1.0 - h * h);
    gb1[j] += delta;
    double* grow = gw1.data() + j * dim;
    for (std::size_t n = 0; n < x.index.size(); ++n) grow[x.index[n]] += delta * x.value[n];
  }
  grad.b2() += upstream;
}

void save_params(std::ostream& out, const ScorerParams& params) {
  out.write(kMagic, 4);
  const char version[4] = {static_cast<char>(kCheckpointVersion), 0, 0, 0};
  out.write(version, 4);
  put_u64(out, params.buckets());
  put_u64(out, params.hidden());
  for (double v : params.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw Error(ErrorKind::kIo, "failed to write checkpoint");
}

ScorerParams load_params(std::istream& in, const ScorerConfig* expected) {
  char header[8];
  if (!in.read(header, 8)) throw ParseError(0, "checkpoint is truncated");
  if (!std::equal(header, header + 4, kMagic)) {
    throw ParseError(0, "not a checkpoint (bad magic)");
  }
  if (static_cast<std::uint8_t>(header[4]) != kCheckpointVersion) {
    throw ParseError(0, fmt::format("unsupported checkpoint version {}",
                                    static_cast<int>(static_cast<std::uint8_t>(header[4]))));
  }
  const std::uint64_t buckets = get_u64(in);
  const std::uint64_t hidden = get_u64(in);
  // Guard against absurd headers before allocating.
  if (buckets == 0 || hidden == 0 || buckets > (1ULL << 24) || hidden > (1ULL << 16)) {
    throw ParseError(0, fmt::format("implausible checkpoint shape {}x{}", buckets, hidden));
  }
  if (expected != nullptr && (expected->buckets != buckets || expected->hidden != hidden)) {
    throw Error(ErrorKind::kMismatch,
                fmt::format("checkpoint shape buckets={} hidden={} does not match "
                            "configured buckets={} hidden={}",
                            buckets, hidden, expected->buckets, expected->hidden));
  }
  ScorerParams p(buckets, hidden);
  for (double& v : p.values()) v = std::bit_cast<double>(get_u64(in));
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ParseError(0, "trailing bytes after checkpoint");
  }
  return p;
}

std::string serialize_params(const ScorerParams& params) {
  std::ostringstream out(std::ios::binary);
  save_params(out, params);
  return out.str();
}

ScorerParams deserialize_params(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return load_params(in);
}

}  // namespace rankforge
