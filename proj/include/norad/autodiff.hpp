#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "norad/sparse.hpp"
#include "norad/tensor.hpp"

namespace norad {

/// Node of the define-by-run tape. Holds the forward value and the
/// gradient accumulator; the backprop closure pushes gradient into the
/// operand nodes.
class TapeNode {
 public:
  std::string op;
  Tensor value;
  std::vector<std::shared_ptr<TapeNode>> inputs;
  std::function<void(TapeNode&)> backprop;
  bool requires_grad = false;

  Tensor& grad();
  bool has_grad() const { return grad_alloc_; }
  void reset_grad();

 private:
  Tensor grad_;
  bool grad_alloc_ = false;
};

using Var = std::shared_ptr<TapeNode>;

Var constant(Tensor t);
Var make_leaf(Tensor t, bool requires_grad = true);

// -- elementwise and linear algebra ops ------------------------------------

Var matmul(const Var& a, const Var& b, bool transpose_a = false, bool transpose_b = false);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var hadamard(const Var& a, const Var& b);
Var affine(const Var& a, double mult, double shift);
Var scale(const Var& a, double s);
Var sigmoid(const Var& a);
Var relu(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var softplus(const Var& a);
Var clamp(const Var& a, double lo, double hi);
Var sum(const Var& a);
Var mean(const Var& a);
Var sum_axis(const Var& a, std::size_t axis);
Var abs_sum(const Var& a);
Var row_l2_normalize(const Var& a);

/// m * dense; the sparse operand is fixed data, gradient flows to `dense`.
Var sparse_matmul(const CsrMatrix& m, const Var& dense);

/// Sum of x*log(sigmoid(s)) + (1-x)*log(1-sigmoid(s)) over all entries,
/// with `pos_weight` multiplying the positive terms. Logits are clamped so
/// probabilities stay within [1e-6, 1-1e-6].
Var bernoulli_logits_ll(const Var& logits, const Tensor& x, double pos_weight = 1.0);

/// As above, restricted to entries where mask != 0.
Var bernoulli_logits_ll(const Var& logits, const Tensor& x, double pos_weight,
                        const Tensor& mask);

/// Weighted Bernoulli log-likelihood of a training adjacency under logits
/// Z B Z^T, computed in row blocks without materializing the n x n matrix.
struct EdgeLikelihoodSpec {
  const std::vector<std::vector<std::uint32_t>>* neighbors = nullptr;
  double pos_weight = 1.0;
  bool exclude_diagonal = true;
  std::size_t block_rows = 128;
};
Var osbm_edge_ll(const Var& z, const Var& b, const EdgeLikelihoodSpec& spec);

// -- backward pass ---------------------------------------------------------

/// Reverse pass from a scalar output; every reachable node ends up with
/// d(output)/d(node) in its gradient accumulator.
void backward(const Var& output);

/// Zeroes gradient accumulators of every node reachable from `output`.
void zero_grad(const Var& output);

// -- parameters ------------------------------------------------------------

struct Parameter {
  std::string name;
  Tensor tensor;
  bool trainable = true;
};

/// Ordered, name-unique collection of model parameters.
class ParameterStore {
 public:
  Parameter& add(const std::string& name, Tensor tensor, bool trainable = true);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool has(const std::string& name) const;
  std::vector<Parameter>& items() { return params_; }
  const std::vector<Parameter>& items() const { return params_; }

 private:
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

/// Per-forward-pass leaf vars for every parameter in a store.
struct BoundParams {
  std::map<std::string, Var> vars;
  Var at(const std::string& name) const;
};

BoundParams bind_params(const ParameterStore& store);

// -- finite-difference gradient checking -----------------------------------

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
};

using LossBuilder = std::function<Var(BoundParams&)>;

/// Central-difference check of the tape gradient of a deterministic loss
/// over every trainable coordinate. Relative error uses denominator
/// max(|analytic|, |numeric|, 1e-8).
GradCheckResult grad_check(ParameterStore& store, const LossBuilder& build_loss,
                           double epsilon);

}  // namespace norad
