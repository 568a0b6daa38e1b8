#pragma once

#include <cstddef>
#include <vector>

#include "wilding/matrix.hpp"

namespace wilding {

inline constexpr double kMinRowNorm = 1e-12;
inline constexpr double kDefaultAlpha = 0.5;

/// W (image vs class), Q (refined caption vs class) and their fusion S.
struct SimilarityTriplet {
  Matrix image;    // W
  Matrix caption;  // Q
  Matrix fused;    // S = alpha W + (1 - alpha) Q
  double alpha = kDefaultAlpha;
};

/// (i, j) = <a_i, t_j> / (|a_i| |t_j|). Throws ZeroNormRow naming the row and
/// whether it came from the query or the class matrix.
Matrix cosine_matrix(const Matrix& queries, const Matrix& classes);

/// alpha W + (1 - alpha) Q. alpha = 1 returns W and alpha = 0 returns Q
/// bit for bit.
Matrix fuse(const Matrix& image_sim, const Matrix& caption_sim, double alpha);

SimilarityTriplet similarities(const Matrix& images, const Matrix& refined_captions,
                               const Matrix& classes, double alpha);

/// Row-wise argmax; ties go to the lowest index.
std::vector<std::size_t> predict(const Matrix& scores);

/// d/dA of sum(grad_out .* cosine_matrix(A, T)).
Matrix cosine_backward(const Matrix& queries, const Matrix& classes, const Matrix& grad_out);

}  // namespace wilding
