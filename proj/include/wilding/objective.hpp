#pragma once

#include <cstddef>
#include <vector>

#include "wilding/matrix.hpp"

namespace wilding {

inline constexpr double kDefaultTau = 0.1;

/// True-class catalog index for each row of a score batch.
struct BatchLabels {
  std::vector<std::size_t> indices;
};

/// Temperature-scaled softmax cross-entropy over classes, averaged over the
/// batch. Uses max-subtracted log-sum-exp.
double contrastive_loss(const Matrix& scores, const BatchLabels& labels, double tau);

/// (i, j) = (softmax(S_i / tau)_j - [j == k_i]) / (B tau).
Matrix loss_gradient(const Matrix& scores, const BatchLabels& labels, double tau);

struct LossAndGradient {
  double loss = 0.0;
  Matrix gradient;
};

/// Both at once, sharing the softmax.
LossAndGradient contrastive_loss_and_gradient(const Matrix& scores, const BatchLabels& labels,
                                              double tau);

}  // namespace wilding
