#include "ls3/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ls3 {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(shape_product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(data.begin(), data.end()) {
  if (shape_product(shape_) != data_.size()) {
    throw std::invalid_argument("tensor shape " + shape_string(shape_) + " does not match " +
                                std::to_string(data_.size()) + " values");
  }
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw std::out_of_range("axis " + std::to_string(axis) + " out of range for shape " +
                            shape_string(shape_));
  }
  return shape_[axis];
}

std::size_t Tensor::rows() const {
  if (shape_.size() == 1) return 1;
  if (shape_.size() != 2) throw std::logic_error("rows() needs a rank-2 tensor, got " + shape_string(shape_));
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.size() == 1) return shape_[0];
  if (shape_.size() != 2) throw std::logic_error("cols() needs a rank-2 tensor, got " + shape_string(shape_));
  return shape_[1];
}

std::span<double> Tensor::row(std::size_t r) {
  const auto c = cols();
  return std::span<double>(data_).subspan(r * c, c);
}

std::span<const double> Tensor::row(std::size_t r) const {
  const auto c = cols();
  return std::span<const double>(data_).subspan(r * c, c);
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
  if (shape_product(shape) != data_.size())
    throw std::invalid_argument("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  Tensor out;
  out.shape_ = std::move(shape);
  out.data_ = data_;
  return out;
}

Tensor Tensor::slice_rows(std::size_t begin, std::size_t end) const {
  const auto c = cols();
  if (begin > end || end > rows()) throw std::out_of_range("slice_rows out of range");
  return Tensor({end - begin, c},
                std::vector<double>(data_.begin() + static_cast<std::ptrdiff_t>(begin * c),
                                    data_.begin() + static_cast<std::ptrdiff_t>(end * c)));
}

Tensor Tensor::gather_rows(std::span<const std::size_t> indices) const {
  const auto c = cols();
  const auto n = rows();
  Tensor out({indices.size(), c});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= n) throw std::out_of_range("gather_rows index out of range");
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(indices[i] * c), c,
                out.data_.begin() + static_cast<std::ptrdiff_t>(i * c));
  }
  return out;
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void require_same_shape(const Tensor& a, const Tensor& b, const std::string& what) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(what + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                                shape_string(b.shape()));
  }
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("concat_cols: row count mismatch");
  const auto n = a.rows(), ca = a.cols(), cb = b.cols();
  Tensor out({n, ca + cb});
  for (std::size_t r = 0; r < n; ++r) {
    std::copy_n(a.row(r).begin(), ca, out.row(r).begin());
    std::copy_n(b.row(r).begin(), cb, out.row(r).begin() + static_cast<std::ptrdiff_t>(ca));
  }
  return out;
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("concat_rows: column count mismatch");
  Tensor out({a.rows() + b.rows(), a.cols()});
  std::copy(a.data().begin(), a.data().end(), out.data().begin());
  std::copy(b.data().begin(), b.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(a.size()));
  return out;
}

}  // namespace ls3
