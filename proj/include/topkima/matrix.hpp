#pragma once

#include <cstddef>
#include <vector>

namespace topkima {

// Row-major dense matrix. Just enough linear algebra for the simulator;
// dimensions here top out at a few hundred, so naive loops are fine.
template <typename T>
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  T* row_ptr(std::size_t r) { return data_.data() + r * cols_; }
  const T* row_ptr(std::size_t r) const { return data_.data() + r * cols_; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool operator==(const Mat&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = Mat<double>;
using IntMatrix = Mat<int>;

Matrix matmul(const Matrix& a, const Matrix& b);
// a * b^T without forming the transpose
Matrix matmul_bt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix submatrix_cols(const Matrix& a, std::size_t col_begin,
                      std::size_t col_count);

}  // namespace topkima
