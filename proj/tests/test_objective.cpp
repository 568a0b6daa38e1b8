#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "test_util.hpp"
#include "wilding/objective.hpp"

using namespace wilding;

namespace {

BatchLabels random_labels(std::mt19937_64& gen, std::size_t batch, std::size_t classes) {
  BatchLabels l;
  for (std::size_t i = 0; i < batch; ++i) l.indices.push_back(gen() % classes);
  return l;
}

}  // namespace

TEST_CASE("uniform rows give log of the class count") {
  for (std::size_t classes : {2u, 16u, 46u}) {
    for (double value : {0.0, 0.3, -0.7}) {
      const Matrix s(3, classes, value);
      const double loss = contrastive_loss(s, BatchLabels{{0, classes - 1, classes / 2}}, 0.1);
      CHECK(loss == doctest::Approx(std::log(static_cast<double>(classes))).epsilon(1e-12));
    }
  }
  CHECK(std::log(46.0) == doctest::Approx(3.8286).epsilon(1e-4));
}

TEST_CASE("two-class closed form") {
  const double loss = contrastive_loss(Matrix(1, 2, {1.0, 0.0}), BatchLabels{{0}}, 0.1);
  CHECK(loss == doctest::Approx(std::log1p(std::exp(-10.0))).epsilon(1e-12));
  CHECK(loss == doctest::Approx(4.5398e-5).epsilon(1e-4));
}

TEST_CASE("temperature scaling identity") {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix s = oracle::random_matrix(gen, 4, 5);
    const auto labels = random_labels(gen, 4, 5);
    const double tau = std::uniform_real_distribution<double>(0.05, 2.0)(gen);
    Matrix scaled = s;
    for (auto& v : scaled.values()) v /= tau;
    CHECK(contrastive_loss(s, labels, tau) ==
          doctest::Approx(contrastive_loss(scaled, labels, 1.0)).epsilon(1e-12));
  }
}

TEST_CASE("loss matches the literal formula") {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix s = oracle::random_matrix(gen, 1 + gen() % 8, 2 + gen() % 6);
    const auto labels = random_labels(gen, s.rows(), s.cols());
    CHECK(contrastive_loss(s, labels, 0.1) ==
          doctest::Approx(oracle::loss(s, labels.indices, 0.1)).epsilon(1e-12));
  }
}

TEST_CASE("invalid inputs") {
  const Matrix s(2, 3, 0.1);
  CHECK_ERROR_CODE(contrastive_loss(s, BatchLabels{{0, 1}}, 0.0), ErrorCode::InvalidTemperature);
  CHECK_ERROR_CODE(contrastive_loss(s, BatchLabels{{0, 1}}, -1.0), ErrorCode::InvalidTemperature);
  CHECK_ERROR_CODE(contrastive_loss(s, BatchLabels{{0, 3}}, 0.1), ErrorCode::LabelOutOfRange);
  CHECK_ERROR_CODE(contrastive_loss(Matrix(0, 3), BatchLabels{}, 0.1), ErrorCode::EmptyBatch);
  CHECK_ERROR_CODE(loss_gradient(s, BatchLabels{{0}}, 0.1), ErrorCode::ShapeMismatch);
}

TEST_CASE("stable at the smallest searched temperature") {
  const double easy = contrastive_loss(Matrix(1, 2, {1.0, 0.0}), BatchLabels{{0}}, 0.001);
  CHECK(easy >= 0.0);
  CHECK(easy < 1e-300);
  const double hard = contrastive_loss(Matrix(1, 2, {0.0, 1.0}), BatchLabels{{0}}, 0.001);
  CHECK(hard == doctest::Approx(1000.0).epsilon(1e-12));
  const Matrix g = loss_gradient(Matrix(1, 2, {0.0, 1.0}), BatchLabels{{0}}, 0.001);
  CHECK(std::isfinite(g(0, 0)));
  CHECK(g(0, 0) == doctest::Approx(-1000.0));
}

TEST_CASE("gradient rows sum to zero with one negative entry") {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix s = oracle::random_matrix(gen, 1 + gen() % 8, 2 + gen() % 6);
    const auto labels = random_labels(gen, s.rows(), s.cols());
    const Matrix g = loss_gradient(s, labels, 0.1);
    for (std::size_t i = 0; i < g.rows(); ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < g.cols(); ++j) {
        sum += g(i, j);
        if (j == labels.indices[i]) {
          CHECK(g(i, j) < 0.0);
        } else {
          CHECK(g(i, j) > 0.0);
        }
      }
      CHECK(std::abs(sum) < 1e-12);
    }
  }
}

TEST_CASE("symmetric two-class gradient") {
  const Matrix g = loss_gradient(Matrix(1, 2, 0.25), BatchLabels{{0}}, 1.0);
  CHECK(g(0, 0) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(g(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("gradient matches finite differences of the loss") {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix s = oracle::random_matrix(gen, 1 + gen() % 6, 2 + gen() % 5);
    const auto labels = random_labels(gen, s.rows(), s.cols());
    const double tau = std::uniform_real_distribution<double>(0.1, 1.0)(gen);
    const Matrix analytic = loss_gradient(s, labels, tau);
    const auto numeric = oracle::central_differences(
        s.values(), [&] { return oracle::loss(s, labels.indices, tau); });
    REQUIRE(oracle::max_relative_error(analytic.values(), numeric) < 1e-6);
  }
}

TEST_CASE("loss properties") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix s = oracle::random_matrix(gen, 3, 4);
    const auto labels = random_labels(gen, 3, 4);
    const double base = contrastive_loss(s, labels, 0.1);
    CHECK(base >= 0.0);

    Matrix shifted = s;
    for (std::size_t i = 0; i < 3; ++i)
      for (auto& v : shifted.row(i)) v += 0.37 * static_cast<double>(i + 1);
    CHECK(contrastive_loss(shifted, labels, 0.1) == doctest::Approx(base).epsilon(1e-12));

    Matrix raised = s;
    raised(1, labels.indices[1]) += 0.05;
    CHECK(contrastive_loss(raised, labels, 0.1) < base);
  }
  // Margin -> infinity drives the loss to zero.
  double previous = INFINITY;
  for (double margin : {0.5, 2.0, 8.0, 32.0, 128.0}) {
    const double l = contrastive_loss(Matrix(1, 3, {margin, 0.0, 0.0}), BatchLabels{{0}}, 1.0);
    CHECK(l < previous);
    previous = l;
  }
  CHECK(previous < 1e-50);
}
