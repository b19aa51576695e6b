#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "norad/tensor.hpp"

namespace norad {

/// Compressed-sparse-row matrix of doubles. Used for the normalized
/// adjacency operator and for sparse binary feature matrices.
struct CsrMatrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<std::size_t> row_ptr;  // size n_rows + 1
  std::vector<std::size_t> col_idx;
  std::vector<double> values;

  static CsrMatrix from_triplets(std::size_t n_rows, std::size_t n_cols,
                                 std::vector<std::tuple<std::size_t, std::size_t, double>> triplets);

  /// CSR view of a dense matrix, keeping only nonzero entries.
  static CsrMatrix from_dense(const Tensor& dense);

  std::size_t nnz() const { return col_idx.size(); }

  /// out = this * dense (n_rows x k), dense is (n_cols x k).
  Tensor multiply(const Tensor& dense) const;

  /// out = this^T * dense (n_cols x k), dense is (n_rows x k).
  Tensor multiply_transposed(const Tensor& dense) const;

  Tensor to_dense() const;
};

}  // namespace norad
