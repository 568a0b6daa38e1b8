#include "wilding/objective.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wilding/error.hpp"

namespace wilding {

namespace {

void check(const Matrix& scores, const BatchLabels& labels, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    fail(ErrorCode::InvalidTemperature, "tau " + std::to_string(tau) + " must be > 0");
  }
  if (scores.rows() == 0) fail(ErrorCode::EmptyBatch, "batch has no rows");
  if (scores.cols() == 0) fail(ErrorCode::EmptyMatrix, "score matrix has no classes");
  if (labels.indices.size() != scores.rows()) {
    fail(ErrorCode::ShapeMismatch, std::to_string(labels.indices.size()) + " labels for " +
                                       std::to_string(scores.rows()) + " rows");
  }
  for (std::size_t i = 0; i < labels.indices.size(); ++i) {
    if (labels.indices[i] >= scores.cols()) {
      fail(ErrorCode::LabelOutOfRange, "row " + std::to_string(i) + ": label " +
                                           std::to_string(labels.indices[i]) + " >= " +
                                           std::to_string(scores.cols()));
    }
  }
}

}  // namespace

LossAndGradient contrastive_loss_and_gradient(const Matrix& scores, const BatchLabels& labels,
                                              double tau) {
  check(scores, labels, tau);
  const std::size_t batch = scores.rows(), classes = scores.cols();
  const double inv_batch = 1.0 / static_cast<double>(batch);
  LossAndGradient out{0.0, Matrix(batch, classes)};
  std::vector<double> expv(classes);
  for (std::size_t i = 0; i < batch; ++i) {
    auto row = scores.row(i);
    double peak = row[0] / tau;
    for (std::size_t j = 1; j < classes; ++j) peak = std::max(peak, row[j] / tau);
    double sum = 0.0;
    for (std::size_t j = 0; j < classes; ++j) {
      expv[j] = std::exp(row[j] / tau - peak);
      sum += expv[j];
    }
    const std::size_t k = labels.indices[i];
    // -log softmax_k = log(sum) - (S_ik / tau - peak)
    out.loss += std::log(sum) - (row[k] / tau - peak);

    auto g = out.gradient.row(i);
    const double scale = inv_batch / tau;
    for (std::size_t j = 0; j < classes; ++j) g[j] = scale * (expv[j] / sum);
    g[k] -= scale;
  }
  out.loss *= inv_batch;
  return out;
}

double contrastive_loss(const Matrix& scores, const BatchLabels& labels, double tau) {
  return contrastive_loss_and_gradient(scores, labels, tau).loss;
}

Matrix loss_gradient(const Matrix& scores, const BatchLabels& labels, double tau) {
  return std::move(contrastive_loss_and_gradient(scores, labels, tau).gradient);
}

}  // namespace wilding
