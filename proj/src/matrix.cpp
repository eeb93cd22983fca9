#include "topkima/matrix.hpp"

#include <stdexcept>

namespace topkima {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("matmul: inner dimensions disagree");
  Matrix out(a.rows(), b.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t r = 0; r < a.cols(); ++r) {
      const double av = a(i, r);
      if (av == 0.0) continue;
      const double* brow = b.row_ptr(r);
      double* orow = out.row_ptr(i);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols())
    throw std::invalid_argument("matmul_bt: inner dimensions disagree");
  Matrix out(a.rows(), b.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.row_ptr(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* brow = b.row_ptr(j);
      double acc = 0.0;
      for (std::size_t r = 0; r < a.cols(); ++r) acc += arow[r] * brow[r];
      out(i, j) = acc;
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Matrix submatrix_cols(const Matrix& a, std::size_t col_begin,
                      std::size_t col_count) {
  if (col_begin + col_count > a.cols())
    throw std::invalid_argument("submatrix_cols: range out of bounds");
  Matrix out(a.rows(), col_count);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < col_count; ++j)
      out(i, j) = a(i, col_begin + j);
  return out;
}

}  // namespace topkima
