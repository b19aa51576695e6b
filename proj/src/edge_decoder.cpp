#include "norad/edge_decoder.hpp"

#include "norad/errors.hpp"

namespace norad {

Var edge_logits(const Var& z, const Var& b) {
  if (z->value.ndim() != 2 || z->value.cols() != b->value.rows()) {
    throw DimensionError("edge_logits: Z " + z->value.shape_str() + " incompatible with B " +
                         b->value.shape_str());
  }
  return matmul(matmul(z, b), z, false, true);
}

Var adjacency_log_likelihood(const Tensor& adjacency, const Var& logits, double pos_weight,
                             bool exclude_diagonal) {
  if (!(pos_weight > 0.0)) throw ContractError("adjacency_log_likelihood: pos_weight > 0");
  if (adjacency.ndim() != 2 || adjacency.rows() != adjacency.cols() ||
      !adjacency.same_shape(logits->value)) {
    throw DimensionError("adjacency_log_likelihood: shape mismatch");
  }
  if (!exclude_diagonal) {
    return bernoulli_logits_ll(logits, adjacency, pos_weight);
  }
  const std::size_t n = adjacency.rows();
  Tensor mask = Tensor::full({n, n}, 1.0);
  for (std::size_t i = 0; i < n; ++i) mask(i, i) = 0.0;
  return bernoulli_logits_ll(logits, adjacency, pos_weight, mask);
}

Var b_penalty(const Var& b, double gamma) {
  if (gamma < 0.0) throw ContractError("b_penalty: gamma must be >= 0");
  return scale(abs_sum(b), gamma);
}

double default_pos_weight(std::size_t n, std::size_t n_train_edges, bool exclude_diagonal) {
  const double pairs =
      static_cast<double>(n) * static_cast<double>(n) - (exclude_diagonal ? n : 0);
  const double pos = 2.0 * static_cast<double>(n_train_edges);
  if (pos == 0.0) return 1.0;
  return std::max(1.0, (pairs - pos) / pos);
}

}  // namespace norad
