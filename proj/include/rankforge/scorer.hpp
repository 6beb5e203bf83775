// Copyright 2026 The RankForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rankforge/retrieval.hpp"
#include "rankforge/types.hpp"

namespace rankforge {

/// Number of dense interaction features appended after the hashed block.
inline constexpr std::size_t kDenseFeatures = 6;

/// Query-document interaction features: `buckets` hashed matched-term idf
/// weights (L2-normalized) followed by the dense features
///   [0] bm25 / (1 + bm25)
///   [1] fraction of unique query terms present in the document
///   [2] idf mass of matched unique terms over idf mass of the query
///   [3] ln(1 + |d|) / 10
///   [4] ln(1 + |q|) / 10
///   [5] fraction of query bigrams occurring contiguously in the document
struct FeatureVector {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
};

/// Nonzero entries of a FeatureVector in increasing index order.
struct SparseFeatures {
  std::size_t dim = 0;
  std::vector<std::uint32_t> index;
  std::vector<double> value;

  static SparseFeatures from_dense(const FeatureVector& x);
};

/// 64-bit FNV-1a over the bytes of `s`.
std::uint64_t fnv1a64(std::string_view s);

FeatureVector extract_features(const InvertedIndex& index, const Bm25Params& params,
                               const Query& query, const Document& doc,
                               std::size_t buckets);
FeatureVector extract_features(const InvertedIndex& index, const Bm25Params& params,
                               std::span<const std::string> query_tokens,
                               const Document& doc, std::size_t buckets);

struct ScorerConfig {
  std::size_t buckets = 1024;
  std::size_t hidden = 16;
  std::uint64_t seed = 0;
};

/// Parameters of s(x) = w2 . tanh(W1 x + b1) + b2, stored as one flat
/// vector laid out W1 (row-major, hidden x dim), b1, w2, b2. The same type
/// holds gradients.
class ScorerParams {
 public:
  ScorerParams() = default;
  /// All-zero parameters.
  ScorerParams(std::size_t buckets, std::size_t hidden);

  std::size_t buckets() const { return buckets_; }
  std::size_t hidden() const { return hidden_; }
  std::size_t input_dim() const { return buckets_ + kDenseFeatures; }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  std::span<double> w1() { return values().subspan(0, hidden_ * input_dim()); }
  std::span<const double> w1() const { return values().subspan(0, hidden_ * input_dim()); }
  std::span<double> b1() { return values().subspan(hidden_ * input_dim(), hidden_); }
  std::span<const double> b1() const { return values().subspan(hidden_ * input_dim(), hidden_); }
  std::span<double> w2() { return values().subspan((input_dim() + 1) * hidden_, hidden_); }
  std::span<const double> w2() const {
    return values().subspan((input_dim() + 1) * hidden_, hidden_);
  }
  double& b2() { return values_.back(); }
  double b2() const { return values_.back(); }

  void set_zero();
  bool same_shape(const ScorerParams& other) const {
    return buckets_ == other.buckets_ && hidden_ == other.hidden_;
  }

  friend bool operator==(const ScorerParams&, const ScorerParams&) = default;

 private:
  std::size_t buckets_ = 0;
  std::size_t hidden_ = 0;
  std::vector<double> values_;
};

/// Glorot-uniform weights, zero biases. Deterministic in `config.seed`.
ScorerParams init_params(const ScorerConfig& config);

/// Throws kMismatch when x does not have the parameters' input dimension.
double score(const ScorerParams& params, std::span<const double> x);
double score(const ScorerParams& params, const SparseFeatures& x);

/// Gradient of `upstream * s(x)` with respect to every parameter.
ScorerParams score_backward(const ScorerParams& params, std::span<const double> x,
                            double upstream);
/// Adds `upstream * ds/dparams` into `grad`.
void accumulate_backward(const ScorerParams& params, const SparseFeatures& x,
                         double upstream, ScorerParams& grad);

// Checkpoint: "RFCK", version byte, 3 zero bytes, u64 buckets, u64 hidden,
// then every parameter as an IEEE-754 double; all little-endian.
inline constexpr std::uint8_t kCheckpointVersion = 1;

void save_params(std::ostream& out, const ScorerParams& params);
/// Throws kParse on bad magic, version, truncation; kMismatch when
/// `expected` is given and its shape differs.
ScorerParams load_params(std::istream& in, const ScorerConfig* expected = nullptr);

std::string serialize_params(const ScorerParams& params);
ScorerParams deserialize_params(const std::string& bytes);

}  // namespace rankforge
