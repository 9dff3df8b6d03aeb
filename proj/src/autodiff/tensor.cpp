#include "imm/autodiff/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "imm/error.hpp"

namespace imm::ad {

std::size_t shape_size(const Shape& shape) noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

namespace {

void check_dims(const Shape& shape) {
  if (std::any_of(shape.begin(), shape.end(), [](std::size_t d) { return d == 0; })) {
    throw DimensionError("tensor dimensions must be positive, got " + shape_string(shape));
  }
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_dims(shape_);
  values_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  check_dims(shape_);
  if (shape_size(shape_) != values_.size()) {
    throw DimensionError("shape " + shape_string(shape_) + " does not match " +
                         std::to_string(values_.size()) + " values");
  }
}

Tensor Tensor::scalar(double value) { return Tensor({1}, std::vector<double>{value}); }

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

Tensor Tensor::column(std::span<const double> values) {
  return Tensor({values.size(), 1}, std::vector<double>(values.begin(), values.end()));
}

void Tensor::ensure_grad() {
  if (grad_.size() != values_.size()) grad_.assign(values_.size(), 0.0);
}

void Tensor::zero_grad() {
  if (grad_.size() == values_.size()) std::fill(grad_.begin(), grad_.end(), 0.0);
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace imm::ad
