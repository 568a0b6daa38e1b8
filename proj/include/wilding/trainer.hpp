#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "wilding/embedding_store.hpp"
#include "wilding/fusion_head.hpp"
#include "wilding/matrix.hpp"
#include "wilding/objective.hpp"
#include "wilding/rng.hpp"
#include "wilding/text_head.hpp"

namespace wilding {

struct TrainConfig {
  double alpha = 0.5;
  double tau = 0.1;
  double learning_rate = 0.09;
  double momentum = 0.80;
  std::size_t batch_size = 128;
  std::size_t epochs = 30;
  std::size_t patience = 5;
  std::size_t hidden_dim = kDefaultHiddenDim;
  std::uint64_t seed = 0;
  double beta = kDefaultBeta;

  /// Throws InvalidConfig naming the first field out of range.
  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Image embeddings, row-aligned caption embeddings and catalog-index labels.
struct LabeledEmbeddings {
  Matrix images;
  Matrix captions;
  std::vector<std::size_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
  LabeledEmbeddings subset(std::span<const std::size_t> rows) const;
};

/// Checks that images and captions carry the same ids in the same order
/// (AlignmentMismatch) and maps label names onto the catalog (UnknownLabel).
LabeledEmbeddings align_labeled(const EmbeddingMatrix& images, const EmbeddingMatrix& captions,
                                const SampleManifest& manifest,
                                std::span<const std::string> catalog);

enum class StopReason { Completed, EarlyStopped };
std::string_view to_string(StopReason reason) noexcept;

struct TrainReport {
  std::vector<double> train_loss;    // mean mini-batch loss per epoch
  std::vector<double> val_accuracy;  // after each epoch
  std::size_t best_epoch = 0;        // 0-based index into val_accuracy
  StopReason stop_reason = StopReason::Completed;
  FusionHeadParams params;           // from best_epoch

  std::size_t epochs_run() const noexcept { return train_loss.size(); }
};

std::string report_to_json(const TrainReport& report, const TrainConfig& config);

/// Loss and parameter gradients for one mini-batch. The image similarities
/// are passed in precomputed: the image encoder is frozen, so W is a constant
/// of training and no gradient flows into it.
struct BatchGradient {
  double loss = 0.0;
  FusionGrads grads;
};

BatchGradient batch_gradient(const FusionHeadParams& params, const Matrix& captions,
                             const Matrix& image_sim, const BatchLabels& labels,
                             const Matrix& class_centroids, double alpha, double tau);

/// v <- m v - lr g;  p <- p + v. Velocity has the parameter shapes.
void sgd_momentum_step(FusionHeadParams& params, FusionHeadParams& velocity,
                       const FusionGrads& grads, double learning_rate, double momentum);

/// Fraction of rows whose fused-score argmax equals the label.
double accuracy(const FusionHeadParams& params, double alpha, const LabeledEmbeddings& data,
                const Matrix& class_centroids);

/// Mini-batch SGD with momentum against the contrastive objective, early
/// stopping on validation accuracy, returning the best epoch's parameters.
TrainReport train(const LabeledEmbeddings& train_data, const LabeledEmbeddings& val_data,
                  const ClassCentroids& classes, const TrainConfig& config);

struct Partition {
  std::vector<std::size_t> train;  // row indices into the manifest
  std::vector<std::size_t> val;
};

inline constexpr double kDefaultValFraction = 0.1;

/// Seeded shuffle then split; val gets round(N * fraction) rows, clamped so
/// both sides are non-empty.
Partition monte_carlo_partition(std::size_t count, std::uint64_t seed, double val_fraction);
/// Same split expressed as ids.
std::pair<std::vector<std::string>, std::vector<std::string>> monte_carlo_partition(
    const SampleManifest& manifest, std::uint64_t seed, double val_fraction);

/// The discrete hyperparameter grid searched at random.
struct SearchSpace {
  std::vector<std::size_t> batch_sizes{128, 256};
  std::vector<std::size_t> hidden_dims;  // 253 + 60k, k = 0..11
  std::vector<double> learning_rates;    // 0.01 .. 0.09
  std::vector<double> momenta;           // 0.80 .. 0.98
  std::size_t min_epochs = 25;
  std::size_t max_epochs = 100;
  std::vector<double> taus{0.1, 0.01, 0.001};
  std::vector<double> alphas{0.4, 0.5, 0.6};

  SearchSpace();

  bool contains(const TrainConfig& config) const;
  /// Draws every searched field uniformly; other fields come from `base`.
  TrainConfig sample(Rng& rng, const TrainConfig& base) const;
};

struct SearchResult {
  std::size_t trial = 0;
  TrainConfig config;
  std::vector<double> partition_accuracy;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // population std over partitions
};

struct SearchOptions {
  std::size_t trials = 30;
  std::size_t partitions = 3;
  double val_fraction = kDefaultValFraction;
  std::uint64_t seed = 0;
  std::size_t threads = 0;  // 0 = hardware concurrency
  TrainConfig base;         // patience and beta are taken from here
};

/// Random search with Monte Carlo partitions. Sorted by mean accuracy
/// descending, ties by trial index; independent of thread count.
std::vector<SearchResult> random_search(const SearchSpace& space, const LabeledEmbeddings& dev,
                                        const ClassCentroids& classes,
                                        const SearchOptions& options);

std::string search_to_json(const std::vector<SearchResult>& ranking);

}  // namespace wilding
