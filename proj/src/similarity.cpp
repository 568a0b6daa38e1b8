#include "wilding/similarity.hpp"

#include <string>

#include "wilding/error.hpp"

namespace wilding {

namespace {

std::vector<double> row_norms(const Matrix& m, const char* which) {
  std::vector<double> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out[r] = norm(m.row(r));
    if (!(out[r] >= kMinRowNorm)) {
      fail(ErrorCode::ZeroNormRow, std::string(which) + " row " + std::to_string(r) +
                                       " has norm " + std::to_string(out[r]));
    }
  }
  return out;
}

void check_dims(const Matrix& queries, const Matrix& classes) {
  if (queries.cols() != classes.cols()) {
    fail(ErrorCode::DimMismatch, "query dim " + std::to_string(queries.cols()) +
                                     " vs class dim " + std::to_string(classes.cols()));
  }
}

}  // namespace

Matrix cosine_matrix(const Matrix& queries, const Matrix& classes) {
  check_dims(queries, classes);
  const auto qn = row_norms(queries, "query");
  const auto cn = row_norms(classes, "class");
  Matrix out(queries.rows(), classes.rows());
  for (std::size_t i = 0; i < queries.rows(); ++i) {
    for (std::size_t j = 0; j < classes.rows(); ++j) {
      out(i, j) = dot(queries.row(i), classes.row(j)) / (qn[i] * cn[j]);
    }
  }
  return out;
}

Matrix fuse(const Matrix& image_sim, const Matrix& caption_sim, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    fail(ErrorCode::AlphaOutOfRange, "alpha " + std::to_string(alpha) + " outside [0, 1]");
  }
  if (image_sim.rows() != caption_sim.rows() || image_sim.cols() != caption_sim.cols()) {
    fail(ErrorCode::ShapeMismatch, "W and Q shapes differ");
  }
  if (alpha == 1.0) return image_sim;
  if (alpha == 0.0) return caption_sim;
  Matrix out(image_sim.rows(), image_sim.cols());
  auto w = image_sim.values();
  auto q = caption_sim.values();
  auto s = out.values();
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = alpha * w[k] + (1.0 - alpha) * q[k];
  return out;
}

SimilarityTriplet similarities(const Matrix& images, const Matrix& refined_captions,
                               const Matrix& classes, double alpha) {
  SimilarityTriplet t;
  t.alpha = alpha;
  t.image = cosine_matrix(images, classes);
  t.caption = cosine_matrix(refined_captions, classes);
  t.fused = fuse(t.image, t.caption, alpha);
  return t;
}

std::vector<std::size_t> predict(const Matrix& scores) {
  if (scores.rows() == 0 || scores.cols() == 0) {
    fail(ErrorCode::EmptyMatrix, "cannot predict from an empty score matrix");
  }
  std::vector<std::size_t> out(scores.rows());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    auto row = scores.row(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j) {
      if (row[j] > row[best]) best = j;
    }
    out[i] = best;
  }
  return out;
}

Matrix cosine_backward(const Matrix& queries, const Matrix& classes, const Matrix& grad_out) {
  check_dims(queries, classes);
  if (grad_out.rows() != queries.rows() || grad_out.cols() != classes.rows()) {
    fail(ErrorCode::ShapeMismatch, "upstream gradient shape does not match the cosine matrix");
  }
  const auto qn = row_norms(queries, "query");
  const auto cn = row_norms(classes, "class");
  const std::size_t F = queries.cols();
  Matrix grad(queries.rows(), F);
  for (std::size_t i = 0; i < queries.rows(); ++i) {
    auto a = queries.row(i);
    auto g = grad.row(i);
    const double na = qn[i];
    // d cos / da = t / (|a||t|) - (<a,t> / (|a|^3 |t|)) a
    double radial = 0.0;
    for (std::size_t j = 0; j < classes.rows(); ++j) {
      const double up = grad_out(i, j);
      if (up == 0.0) continue;
      auto t = classes.row(j);
      const double scale = up / (na * cn[j]);
      for (std::size_t f = 0; f < F; ++f) g[f] += scale * t[f];
      radial += up * dot(a, t) / (na * na * na * cn[j]);
    }
    for (std::size_t f = 0; f < F; ++f) g[f] -= radial * a[f];
  }
  return grad;
}

}  // namespace wilding
