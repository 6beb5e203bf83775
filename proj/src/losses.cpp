// Copyright 2026 The RankForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "rankforge/losses.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "rankforge/error.hpp"

namespace rankforge {
namespace {

void check_finite(std::span<const double> scores, const char* loss) {
  for (double s : scores) {
    if (!std::isfinite(s)) {
      throw Error(ErrorKind::kNumeric, fmt::format("{}: non-finite score", loss));
    }
  }
}

}  // namespace

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

LossOutput lce(std::span<const double> scores) {
  if (scores.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("lce needs a positive and at least one negative, got {} scores",
                            scores.size()));
  }
  check_finite(scores, "lce");
  const double max = *std::max_element(scores.begin(), scores.end());
  LossOutput out;
  out.grad.resize(scores.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    out.grad[j] = std::exp(scores[j] - max);
    sum += out.grad[j];
  }
  out.value = (max - scores[0]) + std::log(sum);
  for (double& g : out.grad) g /= sum;
  out.grad[0] -= 1.0;
  return out;
}

LossOutput ranknet(std::span<const double> scores) {
  if (scores.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("ranknet needs at least 2 scores, got {}", scores.size()));
  }
  check_finite(scores, "ranknet");
  LossOutput out;
  out.grad.assign(scores.size(), 0.0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    for (std::size_t j = i + 1; j < scores.size(); ++j) {
      const double margin = scores[j] - scores[i];
      out.value += softplus(margin);
      const double g = sigmoid(margin);
      out.grad[i] -= g;
      out.grad[j] += g;
    }
  }
  return out;
}

LossOutput bce(double score, int label) {
  if (label != 0 && label != 1) {
    throw Error(ErrorKind::kInvalidArgument, fmt::format("bce label must be 0 or 1, got {}", label));
  }
  if (!std::isfinite(score)) throw Error(ErrorKind::kNumeric, "bce: non-finite score");
  LossOutput out;
  out.value = softplus(score) - static_cast<double>(label) * score;
  out.grad = {sigmoid(score) - static_cast<double>(label)};
  return out;
}

}  // namespace rankforge
