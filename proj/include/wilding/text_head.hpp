#pragma once

// Class text prototypes: each class is represented by the mean of its
// description embeddings, optionally blended with the mean of its
// prompt-template embeddings.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wilding/embedding_store.hpp"
#include "wilding/matrix.hpp"

namespace wilding {

inline constexpr double kDefaultBeta = 1.0;

struct ClassCentroids {
  std::vector<std::string> classes;
  Matrix centroids;  // |classes| x F, row order = classes order
  double beta = kDefaultBeta;

  std::size_t size() const noexcept { return classes.size(); }
  std::size_t dim() const noexcept { return centroids.cols(); }
  /// Catalog index of a class name; throws UnknownLabel.
  std::size_t index_of(const std::string& name) const;
};

/// Arithmetic mean of the rows. Throws EmptyDescriptionSet for zero rows.
std::vector<double> compute_centroid(const Matrix& descriptions);

/// (1 - beta) * template_centroid + beta * llm_centroid.
std::vector<double> blend(std::span<const double> template_centroid,
                          std::span<const double> llm_centroid, double beta);

/// One centroid row per pack class, in pack order. `max_descriptions`, when
/// set, keeps only the first m LLM rows of each class (rows beyond M_c are
/// simply absent, so m >= M_c is a no-op).
ClassCentroids build_class_matrix(const ClassPack& pack, double beta,
                                  std::optional<std::size_t> max_descriptions = std::nullopt);

/// Embedding file with class names as ids, plus `<path>.classes.json`
/// holding the catalog order and beta.
void write_class_centroids(const ClassCentroids& centroids, const std::filesystem::path& path);
ClassCentroids load_class_centroids(const std::filesystem::path& path);
std::filesystem::path classes_sidecar_path(const std::filesystem::path& path);

}  // namespace wilding
