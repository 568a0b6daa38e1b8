#include "wilding/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "wilding/error.hpp"
#include "wilding/rng.hpp"
#include "wilding/similarity.hpp"

namespace wilding {

using nlohmann::json;

void TrainConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorCode::InvalidConfig, what); };
  if (!(alpha >= 0.0 && alpha <= 1.0)) bad("alpha must be in [0, 1]");
  if (!(tau > 0.0) || !std::isfinite(tau)) bad("tau must be > 0");
  // lr = 0 is accepted: it freezes the head, which is useful as a baseline.
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) bad("learning_rate must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) bad("momentum must be in [0, 1)");
  if (batch_size < 1) bad("batch_size must be >= 1");
  if (epochs < 1) bad("epochs must be >= 1");
  if (patience < 1) bad("patience must be >= 1");
  if (hidden_dim < 1) bad("hidden_dim must be >= 1");
  if (!(beta >= 0.0 && beta <= 1.0)) bad("beta must be in [0, 1]");
}

LabeledEmbeddings LabeledEmbeddings::subset(std::span<const std::size_t> rows) const {
  LabeledEmbeddings out{images.gather_rows(rows), captions.gather_rows(rows), {}};
  out.labels.reserve(rows.size());
  for (auto r : rows) out.labels.push_back(labels[r]);
  return out;
}

LabeledEmbeddings align_labeled(const EmbeddingMatrix& images, const EmbeddingMatrix& captions,
                                const SampleManifest& manifest,
                                std::span<const std::string> catalog) {
  if (images.rows() != captions.rows() || images.dim() != captions.dim()) {
    fail(ErrorCode::AlignmentMismatch, "images are " + std::to_string(images.rows()) + "x" +
                                           std::to_string(images.dim()) + ", captions are " +
                                           std::to_string(captions.rows()) + "x" +
                                           std::to_string(captions.dim()));
  }
  for (std::size_t i = 0; i < images.rows(); ++i) {
    if (images.ids[i] != captions.ids[i]) {
      fail(ErrorCode::AlignmentMismatch, "row " + std::to_string(i) + ": image id '" +
                                             images.ids[i] + "' vs caption id '" +
                                             captions.ids[i] + "'");
    }
  }
  if (manifest.ids != images.ids) {
    fail(ErrorCode::AlignmentMismatch, "manifest ids do not match embedding ids");
  }
  if (!manifest.labels) fail(ErrorCode::UnknownLabel, "manifest carries no labels");
  check_labels(manifest, catalog);

  LabeledEmbeddings out{images.values, captions.values, {}};
  out.labels.reserve(images.rows());
  for (const auto& label : *manifest.labels) {
    out.labels.push_back(static_cast<std::size_t>(
        std::find(catalog.begin(), catalog.end(), label) - catalog.begin()));
  }
  return out;
}

std::string_view to_string(StopReason reason) noexcept {
  return reason == StopReason::Completed ? "completed" : "early_stopped";
}

namespace {

json config_to_json(const TrainConfig& c) {
  return json{{"alpha", c.alpha},           {"tau", c.tau},
              {"learning_rate", c.learning_rate}, {"momentum", c.momentum},
              {"batch_size", c.batch_size}, {"epochs", c.epochs},
              {"patience", c.patience},     {"hidden_dim", c.hidden_dim},
              {"seed", c.seed},             {"beta", c.beta}};
}

void check_data(const LabeledEmbeddings& data, const ClassCentroids& classes, const char* which) {
  if (data.size() == 0) fail(ErrorCode::TooFewSamples, std::string(which) + " set is empty");
  if (data.images.rows() != data.size() || data.captions.rows() != data.size()) {
    fail(ErrorCode::AlignmentMismatch, std::string(which) + " images/captions/labels differ in length");
  }
  if (data.images.cols() != classes.dim() || data.captions.cols() != classes.dim()) {
    fail(ErrorCode::DimMismatch, std::string(which) + " embeddings do not match class dim " +
                                     std::to_string(classes.dim()));
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.labels[i] >= classes.size()) {
      fail(ErrorCode::UnknownLabel, std::string(which) + " row " + std::to_string(i) +
                                        " has label index " + std::to_string(data.labels[i]));
    }
  }
}

double accuracy_given_image_sim(const FusionHeadParams& params, double alpha,
                                const Matrix& image_sim, const LabeledEmbeddings& data,
                                const Matrix& class_centroids) {
  const Matrix caption_sim = cosine_matrix(forward(params, data.captions), class_centroids);
  const auto predicted = predict(fuse(image_sim, caption_sim, alpha));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == data.labels[i];
  return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

void momentum_update(std::span<double> param, std::span<double> velocity,
                     std::span<const double> grad, double lr, double momentum) {
  for (std::size_t k = 0; k < param.size(); ++k) {
    velocity[k] = momentum * velocity[k] - lr * grad[k];
    param[k] += velocity[k];
  }
}

}  // namespace

std::string report_to_json(const TrainReport& report, const TrainConfig& config) {
  json doc;
  doc["config"] = config_to_json(config);
  doc["train_loss"] = report.train_loss;
  doc["val_accuracy"] = report.val_accuracy;
  doc["best_epoch"] = report.best_epoch;
  doc["best_val_accuracy"] = report.val_accuracy.at(report.best_epoch);
  doc["epochs_run"] = report.epochs_run();
  doc["stop_reason"] = std::string(to_string(report.stop_reason));
  return doc.dump(2) + "\n";
}

BatchGradient batch_gradient(const FusionHeadParams& params, const Matrix& captions,
                             const Matrix& image_sim, const BatchLabels& labels,
                             const Matrix& class_centroids, double alpha, double tau) {
  const ForwardPass pass = forward_pass(params, captions);
  const Matrix caption_sim = cosine_matrix(pass.output, class_centroids);
  const Matrix fused = fuse(image_sim, caption_sim, alpha);
  LossAndGradient lg = contrastive_loss_and_gradient(fused, labels, tau);

  // dS/dQ = (1 - alpha); W is constant.
  Matrix grad_caption_sim = std::move(lg.gradient);
  for (auto& g : grad_caption_sim.values()) g *= (1.0 - alpha);
  const Matrix grad_refined = cosine_backward(pass.output, class_centroids, grad_caption_sim);
  return BatchGradient{lg.loss, backward(params, captions, pass, grad_refined)};
}

void sgd_momentum_step(FusionHeadParams& params, FusionHeadParams& velocity,
                       const FusionGrads& grads, double learning_rate, double momentum) {
  momentum_update(params.w1.values(), velocity.w1.values(), grads.w1.values(), learning_rate,
                  momentum);
  momentum_update(params.b1, velocity.b1, grads.b1, learning_rate, momentum);
  momentum_update(params.w2.values(), velocity.w2.values(), grads.w2.values(), learning_rate,
                  momentum);
  momentum_update(params.b2, velocity.b2, grads.b2, learning_rate, momentum);
}

double accuracy(const FusionHeadParams& params, double alpha, const LabeledEmbeddings& data,
                const Matrix& class_centroids) {
  if (data.size() == 0) fail(ErrorCode::TooFewSamples, "accuracy of an empty set");
  return accuracy_given_image_sim(params, alpha, cosine_matrix(data.images, class_centroids), data,
                                  class_centroids);
}

TrainReport train(const LabeledEmbeddings& train_data, const LabeledEmbeddings& val_data,
                  const ClassCentroids& classes, const TrainConfig& config) {
  config.validate();
  check_data(train_data, classes, "training");
  check_data(val_data, classes, "validation");

  const Matrix& centroids = classes.centroids;
  const Matrix train_image_sim = cosine_matrix(train_data.images, centroids);
  const Matrix val_image_sim = cosine_matrix(val_data.images, centroids);

  FusionHeadParams params = init_params(classes.dim(), config.hidden_dim, config.seed);
  FusionHeadParams velocity = FusionHeadParams::zeros(classes.dim(), config.hidden_dim);
  Rng shuffle_rng(derive_seed(config.seed, Stream::Shuffle));

  TrainReport report;
  report.params = params;
  double best_accuracy = -1.0;
  std::size_t since_best = 0;

  std::vector<std::size_t> order(train_data.size());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_rng.shuffle(std::span<std::size_t>(order));

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      std::span<const std::size_t> rows(order.data() + start, stop - start);
      BatchLabels labels;
      labels.indices.reserve(rows.size());
      for (auto r : rows) labels.indices.push_back(train_data.labels[r]);

      const BatchGradient bg =
          batch_gradient(params, train_data.captions.gather_rows(rows),
                         train_image_sim.gather_rows(rows), labels, centroids, config.alpha,
                         config.tau);
      sgd_momentum_step(params, velocity, bg.grads, config.learning_rate, config.momentum);
      loss_sum += bg.loss * static_cast<double>(rows.size());
    }
    report.train_loss.push_back(loss_sum / static_cast<double>(order.size()));

    const double acc =
        accuracy_given_image_sim(params, config.alpha, val_image_sim, val_data, centroids);
    report.val_accuracy.push_back(acc);
    if (acc > best_accuracy) {
      best_accuracy = acc;
      report.best_epoch = epoch;
      report.params = params;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      report.stop_reason = StopReason::EarlyStopped;
      break;
    }
  }
  return report;
}

Partition monte_carlo_partition(std::size_t count, std::uint64_t seed, double val_fraction) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    fail(ErrorCode::InvalidFraction, "val fraction " + std::to_string(val_fraction) +
                                         " outside (0, 1)");
  }
  if (count < 2) fail(ErrorCode::TooFewSamples, "need at least 2 samples to partition");
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, Stream::Partition));
  rng.shuffle(std::span<std::size_t>(order));

  auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(count) * val_fraction));
  n_val = std::clamp<std::size_t>(n_val, 1, count - 1);
  Partition p;
  p.val.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  p.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(p.val.begin(), p.val.end());
  std::sort(p.train.begin(), p.train.end());
  return p;
}

std::pair<std::vector<std::string>, std::vector<std::string>> monte_carlo_partition(
    const SampleManifest& manifest, std::uint64_t seed, double val_fraction) {
  const Partition p = monte_carlo_partition(manifest.ids.size(), seed, val_fraction);
  std::pair<std::vector<std::string>, std::vector<std::string>> out;
  for (auto i : p.train) out.first.push_back(manifest.ids[i]);
  for (auto i : p.val) out.second.push_back(manifest.ids[i]);
  return out;
}

}  // namespace wilding
