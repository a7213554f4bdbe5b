#pragma once

#include <Eigen/Core>

#include "ls3/tensor.hpp"

namespace ls3::detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixView = Eigen::Map<RowMatrix>;
using ConstMatrixView = Eigen::Map<const RowMatrix>;

inline MatrixView view(Tensor& t, std::size_t rows, std::size_t cols) {
  return MatrixView(t.data().data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
inline ConstMatrixView view(const Tensor& t, std::size_t rows, std::size_t cols) {
  return ConstMatrixView(t.data().data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
inline MatrixView view(Tensor& t) { return view(t, t.rows(), t.cols()); }
inline ConstMatrixView view(const Tensor& t) { return view(t, t.rows(), t.cols()); }

}  // namespace ls3::detail
