#include "wilding/text_head.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"
#include "wilding/error.hpp"

namespace wilding {

namespace fs = std::filesystem;

std::size_t ClassCentroids::index_of(const std::string& name) const {
  auto it = std::find(classes.begin(), classes.end(), name);
  if (it == classes.end()) fail(ErrorCode::UnknownLabel, "class '" + name + "' not in catalog");
  return static_cast<std::size_t>(it - classes.begin());
}

std::vector<double> compute_centroid(const Matrix& descriptions) {
  if (descriptions.rows() == 0) {
    fail(ErrorCode::EmptyDescriptionSet, "centroid of zero description rows");
  }
  std::vector<double> mean(descriptions.cols(), 0.0);
  for (std::size_t r = 0; r < descriptions.rows(); ++r) {
    auto row = descriptions.row(r);
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += row[c];
  }
  const double inv = 1.0 / static_cast<double>(descriptions.rows());
  for (auto& v : mean) v *= inv;
  return mean;
}

std::vector<double> blend(std::span<const double> template_centroid,
                          std::span<const double> llm_centroid, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) {
    fail(ErrorCode::BetaOutOfRange, "beta " + std::to_string(beta) + " outside [0, 1]");
  }
  if (template_centroid.size() != llm_centroid.size()) {
    fail(ErrorCode::DimMismatch, "centroid dims " + std::to_string(template_centroid.size()) +
                                     " and " + std::to_string(llm_centroid.size()));
  }
  // Exact copies at the endpoints; 0 * m1 + m2 would turn -0.0 into +0.0.
  if (beta == 1.0) return {llm_centroid.begin(), llm_centroid.end()};
  if (beta == 0.0) return {template_centroid.begin(), template_centroid.end()};
  std::vector<double> out(llm_centroid.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (1.0 - beta) * template_centroid[i] + beta * llm_centroid[i];
  }
  return out;
}

ClassCentroids build_class_matrix(const ClassPack& pack, double beta,
                                  std::optional<std::size_t> max_descriptions) {
  if (!(beta >= 0.0 && beta <= 1.0)) {
    fail(ErrorCode::BetaOutOfRange, "beta " + std::to_string(beta) + " outside [0, 1]");
  }
  if (max_descriptions && *max_descriptions == 0) {
    fail(ErrorCode::EmptyDescriptionSet, "description limit of 0 rows");
  }
  ClassCentroids out;
  out.beta = beta;
  out.classes = pack.catalog();
  out.centroids = Matrix(pack.classes.size(), pack.dim());
  for (std::size_t i = 0; i < pack.classes.size(); ++i) {
    const auto& entry = pack.classes[i];
    const Matrix* llm = &entry.llm.values;
    Matrix truncated;
    if (max_descriptions && *max_descriptions < llm->rows()) {
      std::vector<std::size_t> first(*max_descriptions);
      for (std::size_t k = 0; k < first.size(); ++k) first[k] = k;
      truncated = llm->gather_rows(first);
      llm = &truncated;
    }
    if (llm->rows() == 0) {
      fail(ErrorCode::EmptyDescriptionSet, "class '" + entry.name + "' has no descriptions");
    }
    std::vector<double> row = compute_centroid(*llm);
    if (beta < 1.0) {
      if (!entry.templates) {
        fail(ErrorCode::MissingTemplateEmbeddings,
             "class '" + entry.name + "' has no template embeddings but beta < 1");
      }
      if (entry.templates->rows() == 0) {
        fail(ErrorCode::EmptyDescriptionSet, "class '" + entry.name + "' has no template rows");
      }
      row = blend(compute_centroid(entry.templates->values), row, beta);
    }
    std::copy(row.begin(), row.end(), out.centroids.row(i).begin());
  }
  return out;
}

fs::path classes_sidecar_path(const fs::path& path) {
  fs::path p = path;
  p += ".classes.json";
  return p;
}

void write_class_centroids(const ClassCentroids& centroids, const fs::path& path) {
  write_embedding_file(EmbeddingMatrix{centroids.centroids, centroids.classes}, path);
  std::ofstream out(classes_sidecar_path(path), std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + classes_sidecar_path(path).string());
  nlohmann::json doc{{"classes", centroids.classes}, {"beta", centroids.beta}};
  out << doc.dump(2) << '\n';
  if (!out) fail(ErrorCode::IoError, "write failed for " + classes_sidecar_path(path).string());
}

ClassCentroids load_class_centroids(const fs::path& path) {
  EmbeddingMatrix m = load_embedding_file(path);
  ClassCentroids out;
  out.centroids = std::move(m.values);
  const fs::path sidecar = classes_sidecar_path(path);
  std::ifstream in(sidecar);
  if (!in) fail(ErrorCode::IoError, "cannot open " + sidecar.string());
  try {
    const auto doc = nlohmann::json::parse(in);
    out.classes = doc.at("classes").get<std::vector<std::string>>();
    out.beta = doc.value("beta", kDefaultBeta);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedJson, sidecar.string() + ": " + e.what());
  }
  if (out.classes.size() != out.centroids.rows()) {
    fail(ErrorCode::ManifestMismatch, sidecar.string() + " lists " +
                                          std::to_string(out.classes.size()) + " classes for " +
                                          std::to_string(out.centroids.rows()) + " rows");
  }
  return out;
}

}  // namespace wilding
