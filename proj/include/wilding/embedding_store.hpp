#pragma once

// On-disk embedding format, manifests, class packs and the synthetic
// dataset generator.
//
// Embedding file layout (all little-endian):
//
//   offset  size  field
//   0       4     magic "WING"
//   4       2     version (u16) = 1
//   6       2     flags (u16) = 0
//   8       8     row count N (u64)
//   16      8     dim F (u64)
//   24      4NF   float32 payload, row-major
//
// Row ids are not stored in the binary. They live in the sidecar manifest
// `<path>.manifest.json` together with optional labels and split name.
// Values are stored as float32 and widened to double on load; nothing is
// re-normalized.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wilding/matrix.hpp"

namespace wilding {

inline constexpr char kMagic[4] = {'W', 'I', 'N', 'G'};
inline constexpr std::uint16_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 24;

struct EmbeddingMatrix {
  Matrix values;
  std::vector<std::string> ids;

  std::size_t rows() const noexcept { return values.rows(); }
  std::size_t dim() const noexcept { return values.cols(); }

  /// Wraps a matrix with ids "0", "1", ...
  static EmbeddingMatrix with_index_ids(Matrix values);

  /// Throws InvalidDimension, ManifestMismatch, DuplicateId or NonFiniteValue.
  void validate() const;
};

enum class Split { Train, Val, Test };

std::string_view to_string(Split split) noexcept;
Split parse_split(std::string_view name);

struct SampleManifest {
  std::vector<std::string> ids;
  std::optional<std::vector<std::string>> labels;
  std::optional<Split> split;
};

struct ClassEntry {
  std::string name;
  EmbeddingMatrix llm;                      // the class's LLM description embeddings
  std::optional<EmbeddingMatrix> templates;  // prompt-template embeddings, if any
};

struct ClassPack {
  std::vector<ClassEntry> classes;

  std::vector<std::string> catalog() const;
  /// Dim shared by every matrix in the pack; 0 for an empty pack.
  std::size_t dim() const;
  /// Unique names, equal dims across all matrices.
  void validate() const;
};

std::filesystem::path manifest_path(const std::filesystem::path& embedding_path);

/// Reads the binary payload and, when present, the sidecar manifest's ids.
/// Without a sidecar, ids default to the row index.
EmbeddingMatrix load_embedding_file(const std::filesystem::path& path);

/// Decodes an in-memory WING image. Ids are row indices.
EmbeddingMatrix decode_embedding_bytes(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_embedding_bytes(const Matrix& values);

/// Writes the payload plus an ids-only sidecar manifest. Validates first, so
/// a non-finite matrix produces no file at all.
void write_embedding_file(const EmbeddingMatrix& matrix, const std::filesystem::path& path);
/// Same, with labels/split carried into the sidecar. manifest.ids must equal matrix.ids.
void write_embedding_file(const EmbeddingMatrix& matrix, const SampleManifest& manifest,
                          const std::filesystem::path& path);

SampleManifest load_manifest(const std::filesystem::path& manifest_file);
void write_manifest(const SampleManifest& manifest, const std::filesystem::path& manifest_file);

/// Checks labels (if any) against a class catalog; throws UnknownLabel.
void check_labels(const SampleManifest& manifest, std::span<const std::string> catalog);

/// Class pack directory: `pack.json` + one embedding file per referenced matrix.
ClassPack load_class_pack(const std::filesystem::path& dir);
void write_class_pack(const ClassPack& pack, const std::filesystem::path& dir);

/// Image embeddings, row-aligned caption embeddings and labels for one split.
struct LabeledSplit {
  EmbeddingMatrix images;
  EmbeddingMatrix captions;
  SampleManifest manifest;
};

struct SynthParams {
  std::uint64_t seed = 0;
  std::size_t classes = 4;
  std::size_t per_class = 50;
  std::size_t dim = 16;
  double shift = 0.0;
};

struct SyntheticDataset {
  LabeledSplit train;
  LabeledSplit test;
  ClassPack pack;
};

/// Deterministic stand-in for a train-region / test-region pair of
/// camera-trap embedding sets. See synth.cpp for the generative model.
SyntheticDataset synth_dataset(const SynthParams& params);

/// Writes train/test image and caption files, manifests and `pack/`.
void write_synthetic_dataset(const SyntheticDataset& data, const std::filesystem::path& dir);

}  // namespace wilding
