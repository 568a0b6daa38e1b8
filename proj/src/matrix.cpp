#include "wilding/matrix.hpp"

#include <cmath>
#include <string>

#include "wilding/error.hpp"

namespace wilding {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    fail(ErrorCode::ShapeMismatch, "matrix " + std::to_string(rows_) + "x" +
                                       std::to_string(cols_) + " given " +
                                       std::to_string(data_.size()) + " values");
  }
}

Matrix Matrix::gather_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

bool Matrix::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) noexcept { return std::sqrt(dot(a, a)); }

}  // namespace wilding
