// Copyright 2026 The RankForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

namespace rankforge {

/// Loss value together with its gradient with respect to each input score.
struct LossOutput {
  double value = 0.0;
  std::vector<double> grad;
};

/// softplus(x) = ln(1 + e^x), evaluated as max(x, 0) + ln(1 + e^-|x|).
double softplus(double x);
/// Logistic sigmoid without overflow for large |x|.
double sigmoid(double x);

/// Localized contrastive estimation: softmax cross-entropy of scores[0]
/// (the positive) against scores[1..] (sampled negatives).
LossOutput lce(std::span<const double> scores);

/// Pairwise RankNet loss. scores[i] belongs to the document the teacher put
/// at rank i + 1; every pair i < j contributes softplus(s_j - s_i).
LossOutput ranknet(std::span<const double> scores);

/// Binary cross-entropy on a logit, label 0 or 1.
LossOutput bce(double score, int label);

}  // namespace rankforge
