#pragma once

// The trainable caption refiner: one hidden ReLU layer with an additive
// input-to-output skip connection.
//
// Row convention, for a caption embedding x (1 x F):
//
//   z = x W1 + b1          (1 x H)   W1 is F x H
//   h = relu(z)
//   l = x + h W2 + b2      (1 x F)   W2 is H x F

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wilding/matrix.hpp"

namespace wilding {

inline constexpr std::size_t kDefaultHiddenDim = 793;

struct FusionHeadParams {
  std::size_t dim = 0;
  std::size_t hidden = 0;
  Matrix w1;               // F x H
  std::vector<double> b1;  // H
  Matrix w2;               // H x F
  std::vector<double> b2;  // F

  /// All-zero parameters; forward() is then the identity.
  static FusionHeadParams zeros(std::size_t dim, std::size_t hidden);

  std::size_t parameter_count() const noexcept { return 2 * dim * hidden + hidden + dim; }
  /// Shapes consistent with dim/hidden, every entry finite.
  void validate() const;

  friend bool operator==(const FusionHeadParams&, const FusionHeadParams&) = default;
};

/// Gradients mirror the parameter shapes; `input` is d/dX (B x F).
struct FusionGrads {
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;
  Matrix input;
};

/// W1 ~ U(-1/sqrt(F), 1/sqrt(F)), W2 ~ U(-1/sqrt(H), 1/sqrt(H)), biases 0.
FusionHeadParams init_params(std::size_t dim, std::size_t hidden, std::uint64_t seed);

/// Intermediate values kept for the backward pass.
struct ForwardPass {
  Matrix pre_activation;  // B x H
  Matrix output;          // B x F
};

ForwardPass forward_pass(const FusionHeadParams& params, const Matrix& input);
Matrix forward(const FusionHeadParams& params, const Matrix& input);

/// Exact gradients of sum(grad_output .* forward(params, input)). relu'(0) = 0.
/// Parameter gradients are accumulated over rows in increasing row order.
FusionGrads backward(const FusionHeadParams& params, const Matrix& input,
                     const Matrix& grad_output);
FusionGrads backward(const FusionHeadParams& params, const Matrix& input,
                     const ForwardPass& pass, const Matrix& grad_output);

/// Trained head plus what is needed to use it.
struct FusionModel {
  FusionHeadParams params;
  double alpha = 0.5;
  double tau = 0.1;
  std::vector<std::string> train_class_catalog;
};

/// JSON with shortest round-trip decimal floats, so load(save(m)) == m.
void save_model(const FusionModel& model, const std::filesystem::path& path);
FusionModel load_model(const std::filesystem::path& path);
std::string model_to_json(const FusionModel& model);
FusionModel model_from_json(const std::string& text);

}  // namespace wilding
