#include "wilding/fusion_head.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "wilding/error.hpp"
#include "wilding/rng.hpp"

namespace wilding {

using nlohmann::json;

namespace {

void check_input(const FusionHeadParams& params, const Matrix& input) {
  if (input.cols() != params.dim) {
    fail(ErrorCode::DimMismatch, "input has " + std::to_string(input.cols()) +
                                     " columns, head expects " + std::to_string(params.dim));
  }
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Matrix matrix_from_json(const json& rows, std::size_t expect_rows, std::size_t expect_cols,
                        const char* name) {
  auto nested = rows.get<std::vector<std::vector<double>>>();
  if (nested.size() != expect_rows) {
    fail(ErrorCode::ShapeMismatch, std::string(name) + " has " + std::to_string(nested.size()) +
                                       " rows, expected " + std::to_string(expect_rows));
  }
  Matrix m(expect_rows, expect_cols);
  for (std::size_t r = 0; r < expect_rows; ++r) {
    if (nested[r].size() != expect_cols) {
      fail(ErrorCode::ShapeMismatch, std::string(name) + " row " + std::to_string(r) + " has " +
                                         std::to_string(nested[r].size()) + " entries");
    }
    std::copy(nested[r].begin(), nested[r].end(), m.row(r).begin());
  }
  return m;
}

}  // namespace

FusionHeadParams FusionHeadParams::zeros(std::size_t dim, std::size_t hidden) {
  return FusionHeadParams{dim, hidden, Matrix(dim, hidden), std::vector<double>(hidden, 0.0),
                          Matrix(hidden, dim), std::vector<double>(dim, 0.0)};
}

void FusionHeadParams::validate() const {
  if (dim == 0 || hidden == 0) fail(ErrorCode::InvalidParameter, "head dims must be >= 1");
  if (w1.rows() != dim || w1.cols() != hidden || b1.size() != hidden || w2.rows() != hidden ||
      w2.cols() != dim || b2.size() != dim) {
    fail(ErrorCode::ShapeMismatch, "parameter shapes disagree with dim " + std::to_string(dim) +
                                       ", hidden " + std::to_string(hidden));
  }
  auto finite = [](std::span<const double> v) {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  };
  if (!finite(w1.values()) || !finite(b1) || !finite(w2.values()) || !finite(b2)) {
    fail(ErrorCode::NonFiniteValue, "head parameters contain a non-finite entry");
  }
}

FusionHeadParams init_params(std::size_t dim, std::size_t hidden, std::uint64_t seed) {
  if (dim == 0 || hidden == 0) fail(ErrorCode::InvalidParameter, "head dims must be >= 1");
  Rng rng(derive_seed(seed, Stream::Init));
  FusionHeadParams p = FusionHeadParams::zeros(dim, hidden);
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(dim));
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (auto& w : p.w1.values()) w = rng.uniform(-bound1, bound1);
  for (auto& w : p.w2.values()) w = rng.uniform(-bound2, bound2);
  return p;
}

ForwardPass forward_pass(const FusionHeadParams& params, const Matrix& input) {
  check_input(params, input);
  const std::size_t batch = input.rows(), F = params.dim, H = params.hidden;
  ForwardPass pass{Matrix(batch, H), Matrix(batch, F)};
  std::vector<double> act(H);
  for (std::size_t i = 0; i < batch; ++i) {
    auto x = input.row(i);
    auto z = pass.pre_activation.row(i);
    std::copy(params.b1.begin(), params.b1.end(), z.begin());
    for (std::size_t f = 0; f < F; ++f) {
      const double xf = x[f];
      auto w = params.w1.row(f);
      for (std::size_t h = 0; h < H; ++h) z[h] += xf * w[h];
    }
    for (std::size_t h = 0; h < H; ++h) act[h] = z[h] > 0.0 ? z[h] : 0.0;

    auto out = pass.output.row(i);
    for (std::size_t f = 0; f < F; ++f) out[f] = params.b2[f];
    for (std::size_t h = 0; h < H; ++h) {
      if (act[h] == 0.0) continue;
      auto w = params.w2.row(h);
      for (std::size_t f = 0; f < F; ++f) out[f] += act[h] * w[f];
    }
    for (std::size_t f = 0; f < F; ++f) out[f] += x[f];
  }
  return pass;
}

Matrix forward(const FusionHeadParams& params, const Matrix& input) {
  return forward_pass(params, input).output;
}

FusionGrads backward(const FusionHeadParams& params, const Matrix& input,
                     const Matrix& grad_output) {
  return backward(params, input, forward_pass(params, input), grad_output);
}

FusionGrads backward(const FusionHeadParams& params, const Matrix& input,
                     const ForwardPass& pass, const Matrix& grad_output) {
  check_input(params, input);
  if (grad_output.rows() != input.rows() || grad_output.cols() != params.dim) {
    fail(ErrorCode::DimMismatch, "output gradient shape does not match the forward output");
  }
  const std::size_t batch = input.rows(), F = params.dim, H = params.hidden;
  FusionGrads g{Matrix(F, H), std::vector<double>(H, 0.0), Matrix(H, F),
                std::vector<double>(F, 0.0), Matrix(batch, F)};
  std::vector<double> grad_z(H);
  for (std::size_t i = 0; i < batch; ++i) {
    auto x = input.row(i);
    auto z = pass.pre_activation.row(i);
    auto go = grad_output.row(i);

    for (std::size_t f = 0; f < F; ++f) g.b2[f] += go[f];
    for (std::size_t h = 0; h < H; ++h) {
      const double a = z[h] > 0.0 ? z[h] : 0.0;
      auto w = params.w2.row(h);
      auto gw = g.w2.row(h);
      double back = 0.0;
      for (std::size_t f = 0; f < F; ++f) {
        gw[f] += a * go[f];
        back += w[f] * go[f];
      }
      grad_z[h] = z[h] > 0.0 ? back : 0.0;
    }
    for (std::size_t h = 0; h < H; ++h) g.b1[h] += grad_z[h];

    auto gx = g.input.row(i);
    for (std::size_t f = 0; f < F; ++f) {
      auto w = params.w1.row(f);
      auto gw = g.w1.row(f);
      double back = go[f];  // skip path
      for (std::size_t h = 0; h < H; ++h) {
        gw[h] += x[f] * grad_z[h];
        back += w[h] * grad_z[h];
      }
      gx[f] = back;
    }
  }
  return g;
}

std::string model_to_json(const FusionModel& model) {
  const auto& p = model.params;
  json doc;
  doc["dim"] = p.dim;
  doc["hidden"] = p.hidden;
  doc["w1"] = matrix_to_json(p.w1);
  doc["b1"] = p.b1;
  doc["w2"] = matrix_to_json(p.w2);
  doc["b2"] = p.b2;
  doc["alpha"] = model.alpha;
  doc["tau"] = model.tau;
  doc["train_class_catalog"] = model.train_class_catalog;
  return doc.dump() + "\n";
}

FusionModel model_from_json(const std::string& text) {
  FusionModel model;
  try {
    const json doc = json::parse(text);
    auto& p = model.params;
    p.dim = doc.at("dim").get<std::size_t>();
    p.hidden = doc.at("hidden").get<std::size_t>();
    p.w1 = matrix_from_json(doc.at("w1"), p.dim, p.hidden, "w1");
    p.b1 = doc.at("b1").get<std::vector<double>>();
    p.w2 = matrix_from_json(doc.at("w2"), p.hidden, p.dim, "w2");
    p.b2 = doc.at("b2").get<std::vector<double>>();
    model.alpha = doc.at("alpha").get<double>();
    model.tau = doc.at("tau").get<double>();
    model.train_class_catalog = doc.value("train_class_catalog", std::vector<std::string>{});
  } catch (const json::exception& e) {
    fail(ErrorCode::MalformedJson, std::string("model file: ") + e.what());
  }
  model.params.validate();
  return model;
}

void save_model(const FusionModel& model, const std::filesystem::path& path) {
  model.params.validate();
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << model_to_json(model);
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

FusionModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return model_from_json(buffer.str());
}

}  // namespace wilding
