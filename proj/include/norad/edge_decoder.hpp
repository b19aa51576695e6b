#pragma once

#include "norad/autodiff.hpp"
#include "norad/tensor.hpp"

namespace norad {

/// OSBM edge decoder: p(A_ij = 1) = sigmoid(z_i^T B z_j).

/// Dense n x n logit matrix Z B Z^T (tape-tracked; small-graph path).
Var edge_logits(const Var& z, const Var& b);

/// Weighted Bernoulli log-likelihood over ordered node pairs from a dense
/// logit matrix. `adjacency` is the dense 0/1 training adjacency.
Var adjacency_log_likelihood(const Tensor& adjacency, const Var& logits, double pos_weight,
                             bool exclude_diagonal);

/// gamma * sum |B_ij|; subtracted from the maximized objective.
Var b_penalty(const Var& b, double gamma);

/// Standard sparse-graph re-weighting: (#included pairs - 2|E|) / (2|E|).
double default_pos_weight(std::size_t n, std::size_t n_train_edges, bool exclude_diagonal);

}  // namespace norad
