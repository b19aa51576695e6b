#include "norad/sparse.hpp"

#include <algorithm>
#include <tuple>

#include "norad/errors.hpp"

namespace norad {

CsrMatrix CsrMatrix::from_triplets(
    std::size_t n_rows, std::size_t n_cols,
    std::vector<std::tuple<std::size_t, std::size_t, double>> triplets) {
  std::sort(triplets.begin(), triplets.end());
  CsrMatrix m;
  m.n_rows = n_rows;
  m.n_cols = n_cols;
  m.row_ptr.assign(n_rows + 1, 0);
  m.col_idx.reserve(triplets.size());
  m.values.reserve(triplets.size());
  for (const auto& [r, c, v] : triplets) {
    if (r >= n_rows || c >= n_cols) throw IndexError("sparse triplet out of range");
    m.row_ptr[r + 1]++;
    m.col_idx.push_back(c);
    m.values.push_back(v);
  }
  for (std::size_t r = 0; r < n_rows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
  return m;
}

CsrMatrix CsrMatrix::from_dense(const Tensor& dense) {
  CsrMatrix m;
  m.n_rows = dense.rows();
  m.n_cols = dense.cols();
  m.row_ptr.assign(m.n_rows + 1, 0);
  for (std::size_t i = 0; i < m.n_rows; ++i) {
    for (std::size_t j = 0; j < m.n_cols; ++j) {
      double v = dense(i, j);
      if (v != 0.0) {
        m.col_idx.push_back(j);
        m.values.push_back(v);
      }
    }
    m.row_ptr[i + 1] = m.col_idx.size();
  }
  return m;
}

Tensor CsrMatrix::multiply(const Tensor& dense) const {
  if (dense.rows() != n_cols) {
    throw DimensionError("sparse multiply: operand has " + std::to_string(dense.rows()) +
                         " rows, expected " + std::to_string(n_cols));
  }
  const std::size_t k = dense.cols();
  Tensor out({n_rows, k});
  for (std::size_t i = 0; i < n_rows; ++i) {
    double* out_row = out.data() + i * k;
    for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
      const double v = values[p];
      const double* in_row = dense.data() + col_idx[p] * k;
      for (std::size_t c = 0; c < k; ++c) out_row[c] += v * in_row[c];
    }
  }
  return out;
}

Tensor CsrMatrix::multiply_transposed(const Tensor& dense) const {
  if (dense.rows() != n_rows) {
    throw DimensionError("sparse multiply_transposed: operand has " +
                         std::to_string(dense.rows()) + " rows, expected " +
                         std::to_string(n_rows));
  }
  const std::size_t k = dense.cols();
  Tensor out({n_cols, k});
  for (std::size_t i = 0; i < n_rows; ++i) {
    const double* in_row = dense.data() + i * k;
    for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
      const double v = values[p];
      double* out_row = out.data() + col_idx[p] * k;
      for (std::size_t c = 0; c < k; ++c) out_row[c] += v * in_row[c];
    }
  }
  return out;
}

Tensor CsrMatrix::to_dense() const {
  Tensor out({n_rows, n_cols});
  for (std::size_t i = 0; i < n_rows; ++i) {
    for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
      out(i, col_idx[p]) += values[p];
    }
  }
  return out;
}

}  // namespace norad
