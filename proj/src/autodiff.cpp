#include "norad/autodiff.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "norad/errors.hpp"

namespace norad {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const EMat>;
using MMap = Eigen::Map<EMat>;


double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(sigmoid(x)) without overflow.
double log_sigmoid(double x) { return std::min(x, 0.0) - std::log1p(std::exp(-std::abs(x))); }

Var make_node(std::string op, Tensor value, std::vector<Var> inputs,
              std::function<void(TapeNode&)> backprop) {
  auto n = std::make_shared<TapeNode>();
  n->op = std::move(op);
  n->value = std::move(value);
  n->inputs = std::move(inputs);
  for (const auto& in : n->inputs) {
    if (in->requires_grad) n->requires_grad = true;
  }
  if (n->requires_grad) n->backprop = std::move(backprop);
  return n;
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (!a->value.same_shape(b->value)) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a->value.shape_str() +
                         " vs " + b->value.shape_str());
  }
}

// Elementwise unary op from value function and derivative (as a function of
// the input value x and output value y).
Var unary_op(const char* name, const Var& a, double (*f)(double),
             double (*df)(double, double)) {
  Tensor out(a->value.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out(i) = f(a->value(i));
  Var in = a;
  return make_node(name, std::move(out), {a}, [in, df](TapeNode& n) {
    if (!in->requires_grad) return;
    Tensor& g = in->grad();
    const Tensor& up = n.grad();
    for (std::size_t i = 0; i < g.numel(); ++i) {
      g(i) += up(i) * df(in->value(i), n.value(i));
    }
  });
}

}  // namespace

Tensor& TapeNode::grad() {
  if (!grad_alloc_) {
    grad_ = Tensor::zeros(value.shape());
    grad_alloc_ = true;
  }
  return grad_;
}

void TapeNode::reset_grad() {
  if (grad_alloc_) grad_.fill(0.0);
}

Var constant(Tensor t) { return make_leaf(std::move(t), false); }

Var make_leaf(Tensor t, bool requires_grad) {
  auto n = std::make_shared<TapeNode>();
  n->op = requires_grad ? "leaf" : "const";
  n->value = std::move(t);
  n->requires_grad = requires_grad;
  return n;
}

Var matmul(const Var& a, const Var& b, bool transpose_a, bool transpose_b) {
  const std::size_t am = transpose_a ? a->value.cols() : a->value.rows();
  const std::size_t bn = transpose_b ? b->value.rows() : b->value.cols();
  std::vector<std::size_t> out_shape =
      (a->value.ndim() == 1 && !transpose_a) ? std::vector<std::size_t>{bn}
                                             : std::vector<std::size_t>{am, bn};
  Tensor out(out_shape);
  gemm(a->value, transpose_a, b->value, transpose_b, out, false);
  Var va = a, vb = b;
  return make_node("matmul", std::move(out), {a, b},
                   [va, vb, transpose_a, transpose_b](TapeNode& n) {
                     const Tensor& g = n.grad();
                     if (va->requires_grad) {
                       Tensor& ga = va->grad();
                       if (!transpose_a && !transpose_b) {
                         gemm(g, false, vb->value, true, ga, true);
                       } else if (transpose_a && !transpose_b) {
                         gemm(vb->value, false, g, true, ga, true);
                       } else if (!transpose_a && transpose_b) {
                         gemm(g, false, vb->value, false, ga, true);
                       } else {
                         gemm(vb->value, true, g, true, ga, true);
                       }
                     }
                     if (vb->requires_grad) {
                       Tensor& gb = vb->grad();
                       if (!transpose_a && !transpose_b) {
                         gemm(va->value, true, g, false, gb, true);
                       } else if (transpose_a && !transpose_b) {
                         gemm(va->value, false, g, false, gb, true);
                       } else if (!transpose_a && transpose_b) {
                         gemm(g, true, va->value, false, gb, true);
                       } else {
                         gemm(g, true, va->value, true, gb, true);
                       }
                     }
                   });
}

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  Tensor out(a->value.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out(i) = a->value(i) + b->value(i);
  Var va = a, vb = b;
  return make_node("add", std::move(out), {a, b}, [va, vb](TapeNode& n) {
    const Tensor& g = n.grad();
    if (va->requires_grad) {
      Tensor& ga = va->grad();
      for (std::size_t i = 0; i < g.numel(); ++i) ga(i) += g(i);
    }
    if (vb->requires_grad) {
      Tensor& gb = vb->grad();
      for (std::size_t i = 0; i < g.numel(); ++i) gb(i) += g(i);
    }
  });
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  Tensor out(a->value.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out(i) = a->value(i) - b->value(i);
  Var va = a, vb = b;
  return make_node("sub", std::move(out), {a, b}, [va, vb](TapeNode& n) {
    const Tensor& g = n.grad();
    if (va->requires_grad) {
      Tensor& ga = va->grad();
      for (std::size_t i = 0; i < g.numel(); ++i) ga(i) += g(i);
    }
    if (vb->requires_grad) {
      Tensor& gb = vb->grad();
      for (std::size_t i = 0; i < g.numel(); ++i) gb(i) -= g(i);
    }
  });
}

Var hadamard(const Var& a, const Var& b) {
  check_same_shape(a, b, "hadamard");
  Tensor out(a->value.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out(i) = a->value(i) * b->value(i);
  Var va = a, vb = b;
  return make_node("hadamard", std::move(out), {a, b}, [va, vb](TapeNode& n) {
    const Tensor& g = n.grad();
    if (va->requires_grad) {
      Tensor& ga = va->grad();
      for (std::size_t i = 0; i < g.numel(); ++i) ga(i) += g(i) * vb->value(i);
    }
    if (vb->requires_grad) {
      Tensor& gb = vb->grad();
      for (std::size_t i = 0; i < g.numel(); ++i) gb(i) += g(i) * va->value(i);
    }
  });
}

Var affine(const Var& a, double mult, double shift) {
  Tensor out(a->value.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out(i) = mult * a->value(i) + shift;
  Var va = a;
  return make_node("affine", std::move(out), {a}, [va, mult](TapeNode& n) {
    if (!va->requires_grad) return;
    Tensor& g = va->grad();
    const Tensor& up = n.grad();
    for (std::size_t i = 0; i < g.numel(); ++i) g(i) += mult * up(i);
  });
}

Var scale(const Var& a, double s) { return affine(a, s, 0.0); }

Var sigmoid(const Var& a) {
  return unary_op(
      "sigmoid", a, +[](double x) { return stable_sigmoid(x); },
      +[](double, double y) { return y * (1.0 - y); });
}

Var relu(const Var& a) {
  return unary_op(
      "relu", a, +[](double x) { return x > 0.0 ? x : 0.0; },
      +[](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var exp(const Var& a) {
  return unary_op(
      "exp", a, +[](double x) { return std::exp(x); },
      +[](double, double y) { return y; });
}

Var log(const Var& a) {
  for (std::size_t i = 0; i < a->value.numel(); ++i) {
    if (!(a->value(i) > 0.0)) {
      throw DomainError("log of non-positive value " + std::to_string(a->value(i)));
    }
  }
  return unary_op(
      "log", a, +[](double x) { return std::log(x); },
      +[](double x, double) { return 1.0 / x; });
}

Var softplus(const Var& a) {
  // max(x,0) + log1p(exp(-|x|)) avoids overflow for large |x|.
  return unary_op(
      "softplus", a,
      +[](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
      +[](double x, double) { return stable_sigmoid(x); });
}

Var clamp(const Var& a, double lo, double hi) {
  Tensor out(a->value.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) {
    out(i) = std::min(std::max(a->value(i), lo), hi);
  }
  Var va = a;
  return make_node("clamp", std::move(out), {a}, [va, lo, hi](TapeNode& n) {
    if (!va->requires_grad) return;
    Tensor& g = va->grad();
    const Tensor& up = n.grad();
    for (std::size_t i = 0; i < g.numel(); ++i) {
      const double x = va->value(i);
      if (x > lo && x < hi) g(i) += up(i);
    }
  });
}

Var sum(const Var& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a->value.numel(); ++i) s += a->value(i);
  Var va = a;
  return make_node("sum", Tensor::scalar(s), {a}, [va](TapeNode& n) {
    if (!va->requires_grad) return;
    Tensor& g = va->grad();
    const double up = n.grad()(0);
    for (std::size_t i = 0; i < g.numel(); ++i) g(i) += up;
  });
}

Var mean(const Var& a) { return scale(sum(a), 1.0 / static_cast<double>(a->value.numel())); }

Var sum_axis(const Var& a, std::size_t axis) {
  if (a->value.ndim() != 2 || axis > 1) {
    throw DimensionError("sum_axis: need a 2-D tensor and axis in {0,1}");
  }
  const std::size_t r = a->value.rows(), c = a->value.cols();
  Tensor out({axis == 0 ? c : r});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      out(axis == 0 ? j : i) += a->value(i, j);
    }
  }
  Var va = a;
  return make_node("sum_axis", std::move(out), {a}, [va, axis, r, c](TapeNode& n) {
    if (!va->requires_grad) return;
    Tensor& g = va->grad();
    const Tensor& up = n.grad();
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        g(i * c + j) += up(axis == 0 ? j : i);
      }
    }
  });
}

Var abs_sum(const Var& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a->value.numel(); ++i) s += std::abs(a->value(i));
  Var va = a;
  return make_node("abs_sum", Tensor::scalar(s), {a}, [va](TapeNode& n) {
    if (!va->requires_grad) return;
    Tensor& g = va->grad();
    const double up = n.grad()(0);
    for (std::size_t i = 0; i < g.numel(); ++i) {
      const double x = va->value(i);
      g(i) += up * (x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0));
    }
  });
}

Var row_l2_normalize(const Var& a) {
  const std::size_t r = a->value.rows(), c = a->value.cols();
  Tensor out(a->value.shape());
  std::vector<double> norms(r, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += a->value(i * c + j) * a->value(i * c + j);
    norms[i] = std::sqrt(s);
    if (norms[i] > 0.0) {
      for (std::size_t j = 0; j < c; ++j) out(i * c + j) = a->value(i * c + j) / norms[i];
    }
  }
  Var va = a;
  return make_node("row_l2_normalize", std::move(out), {a},
                   [va, norms = std::move(norms), r, c](TapeNode& n) {
                     if (!va->requires_grad) return;
                     Tensor& g = va->grad();
                     const Tensor& up = n.grad();
                     for (std::size_t i = 0; i < r; ++i) {
                       const double nm = norms[i];
                       if (nm == 0.0) continue;
                       double dot = 0.0;
                       for (std::size_t j = 0; j < c; ++j) {
                         dot += up(i * c + j) * va->value(i * c + j);
                       }
                       const double inv = 1.0 / nm;
                       const double inv3 = inv * inv * inv;
                       for (std::size_t j = 0; j < c; ++j) {
                         g(i * c + j) += up(i * c + j) * inv - va->value(i * c + j) * dot * inv3;
                       }
                     }
                   });
}

Var sparse_matmul(const CsrMatrix& m, const Var& dense) {
  Tensor out = m.multiply(dense->value);
  Var vd = dense;
  const CsrMatrix* mp = &m;  // caller keeps the sparse operand alive
  return make_node("sparse_matmul", std::move(out), {dense}, [vd, mp](TapeNode& n) {
    if (!vd->requires_grad) return;
    Tensor gt = mp->multiply_transposed(n.grad());
    Tensor& g = vd->grad();
    for (std::size_t i = 0; i < g.numel(); ++i) g(i) += gt(i);
  });
}

Var bernoulli_logits_ll(const Var& logits, const Tensor& x, double pos_weight) {
  if (!logits->value.same_shape(x)) {
    throw DimensionError("bernoulli_logits_ll: shape mismatch " + logits->value.shape_str() +
                         " vs " + x.shape_str());
  }
  double ll = 0.0;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double s = logits->value(i);
    ll += pos_weight * x(i) * log_sigmoid(s) + (1.0 - x(i)) * log_sigmoid(-s);
  }
  Var vl = logits;
  Tensor xcopy = x;
  return make_node("bernoulli_logits_ll", Tensor::scalar(ll), {logits},
                   [vl, xcopy = std::move(xcopy), pos_weight](TapeNode& n) {
                     if (!vl->requires_grad) return;
                     Tensor& g = vl->grad();
                     const double up = n.grad()(0);
                     for (std::size_t i = 0; i < g.numel(); ++i) {
                       const double p = stable_sigmoid(vl->value(i));
                       g(i) += up * (pos_weight * xcopy(i) * (1.0 - p) - (1.0 - xcopy(i)) * p);
                     }
                   });
}

Var bernoulli_logits_ll(const Var& logits, const Tensor& x, double pos_weight,
                        const Tensor& mask) {
  if (!logits->value.same_shape(x) || !logits->value.same_shape(mask)) {
    throw DimensionError("bernoulli_logits_ll: shape mismatch");
  }
  double ll = 0.0;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    if (mask(i) == 0.0) continue;
    const double s = logits->value(i);
    ll += pos_weight * x(i) * log_sigmoid(s) + (1.0 - x(i)) * log_sigmoid(-s);
  }
  Var vl = logits;
  Tensor xcopy = x;
  Tensor mcopy = mask;
  return make_node("bernoulli_logits_ll_masked", Tensor::scalar(ll), {logits},
                   [vl, xcopy = std::move(xcopy), mcopy = std::move(mcopy),
                    pos_weight](TapeNode& n) {
                     if (!vl->requires_grad) return;
                     Tensor& g = vl->grad();
                     const double up = n.grad()(0);
                     for (std::size_t i = 0; i < g.numel(); ++i) {
                       if (mcopy(i) == 0.0) continue;
                       const double p = stable_sigmoid(vl->value(i));
                       g(i) += up * (pos_weight * xcopy(i) * (1.0 - p) - (1.0 - xcopy(i)) * p);
                     }
                   });
}

namespace {

// Fills one row block of dLL/dL for the OSBM likelihood.
void edge_ll_block(const EMat& zb_block, const CMap& z, const EdgeLikelihoodSpec& spec,
                   std::size_t row0, double* ll_out, EMat* grad_out) {
  const auto& nbrs = *spec.neighbors;
  const std::size_t n = z.rows();
  EMat logits = zb_block * z.transpose();  // block x n
  double ll = 0.0;
  for (Eigen::Index bi = 0; bi < logits.rows(); ++bi) {
    const std::size_t i = row0 + static_cast<std::size_t>(bi);
    for (std::size_t j = 0; j < n; ++j) {
      if (spec.exclude_diagonal && j == i) {
        if (grad_out) (*grad_out)(bi, j) = 0.0;
        continue;
      }
      const double s = logits(bi, j);
      const bool is_edge = std::binary_search(nbrs[i].begin(), nbrs[i].end(),
                                              static_cast<std::uint32_t>(j));
      if (is_edge) {
        ll += spec.pos_weight * log_sigmoid(s);
        if (grad_out) (*grad_out)(bi, j) = spec.pos_weight * (1.0 - stable_sigmoid(s));
      } else {
        ll += log_sigmoid(-s);
        if (grad_out) (*grad_out)(bi, j) = -stable_sigmoid(s);
      }
    }
  }
  *ll_out = ll;
}

}  // namespace

Var osbm_edge_ll(const Var& z, const Var& b, const EdgeLikelihoodSpec& spec) {
  if (z->value.ndim() != 2 || b->value.ndim() != 2 || z->value.cols() != b->value.rows() ||
      b->value.rows() != b->value.cols()) {
    throw DimensionError("osbm_edge_ll: incompatible shapes " + z->value.shape_str() +
                         " and " + b->value.shape_str());
  }
  if (spec.neighbors == nullptr || spec.neighbors->size() != z->value.rows()) {
    throw ContractError("osbm_edge_ll: adjacency list size mismatch");
  }
  const std::size_t n = z->value.rows();
  const std::size_t k = z->value.cols();
  CMap zm(z->value.data(), n, k);
  CMap bm(b->value.data(), k, k);
  EMat zbm = zm * bm;  // n x K
  EdgeLikelihoodSpec sp = spec;
  double total = 0.0;
  const std::size_t block = std::max<std::size_t>(1, sp.block_rows);
  for (std::size_t r0 = 0; r0 < n; r0 += block) {
    const std::size_t rows = std::min(block, n - r0);
    double ll = 0.0;
    EMat zb_block = zbm.middleRows(static_cast<Eigen::Index>(r0), static_cast<Eigen::Index>(rows));
    edge_ll_block(zb_block, zm, sp, r0, &ll, nullptr);
    total += ll;
  }
  Var vz = z, vb = b;
  return make_node("osbm_edge_ll", Tensor::scalar(total), {z, b}, [vz, vb, sp](TapeNode& nd) {
    const std::size_t n = vz->value.rows();
    const std::size_t k = vz->value.cols();
    const double up = nd.grad()(0);
    CMap zm(vz->value.data(), n, k);
    CMap bm(vb->value.data(), k, k);
    EMat zbm = zm * bm;
    EMat zbtm = zm * bm.transpose();
    EMat gz = EMat::Zero(n, k);
    EMat gb = EMat::Zero(k, k);
    const std::size_t block = std::max<std::size_t>(1, sp.block_rows);
    for (std::size_t r0 = 0; r0 < n; r0 += block) {
      const std::size_t rows = std::min(block, n - r0);
      double ll = 0.0;
      EMat zb_block =
          zbm.middleRows(static_cast<Eigen::Index>(r0), static_cast<Eigen::Index>(rows));
      EMat g(rows, n);
      edge_ll_block(zb_block, zm, sp, r0, &ll, &g);
      // dLL/dZ = G Z B^T + G^T Z B, dLL/dB = Z^T G Z, assembled per block.
      gz.middleRows(static_cast<Eigen::Index>(r0), static_cast<Eigen::Index>(rows)).noalias() +=
          g * zbtm;
      gz.noalias() += g.transpose() * zb_block;
      EMat gzrows = g * zm;  // rows x K
      gb.noalias() += zm.middleRows(static_cast<Eigen::Index>(r0),
                                    static_cast<Eigen::Index>(rows)).transpose() * gzrows;
    }
    if (vz->requires_grad) {
      Tensor& gzt = vz->grad();
      MMap(gzt.data(), n, k) += up * gz;
    }
    if (vb->requires_grad) {
      Tensor& gbt = vb->grad();
      MMap(gbt.data(), k, k) += up * gb;
    }
  });
}

namespace {

std::vector<TapeNode*> topo_order(const Var& output) {
  std::vector<TapeNode*> order;
  std::unordered_set<TapeNode*> visited;
  std::vector<std::pair<TapeNode*, std::size_t>> stack;
  stack.emplace_back(output.get(), 0);
  visited.insert(output.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->inputs.size()) {
      TapeNode* child = node->inputs[idx++].get();
      if (visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

}  // namespace

void backward(const Var& output) {
  if (output->value.numel() != 1) {
    throw ContractError("backward requires a scalar output, got shape " +
                        output->value.shape_str());
  }
  std::vector<TapeNode*> order = topo_order(output);
  output->grad()(0) += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TapeNode* node = *it;
    if (node->requires_grad && node->backprop) node->backprop(*node);
  }
}

void zero_grad(const Var& output) {
  for (TapeNode* node : topo_order(output)) node->reset_grad();
}

Parameter& ParameterStore::add(const std::string& name, Tensor tensor, bool trainable) {
  if (index_.count(name)) throw ConsistencyError("duplicate parameter name: " + name);
  index_[name] = params_.size();
  params_.push_back(Parameter{name, std::move(tensor), trainable});
  return params_.back();
}

Parameter& ParameterStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw IndexError("unknown parameter: " + name);
  return params_[it->second];
}

const Parameter& ParameterStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw IndexError("unknown parameter: " + name);
  return params_[it->second];
}

bool ParameterStore::has(const std::string& name) const { return index_.count(name) > 0; }

Var BoundParams::at(const std::string& name) const {
  auto it = vars.find(name);
  if (it == vars.end()) throw IndexError("unbound parameter: " + name);
  return it->second;
}

BoundParams bind_params(const ParameterStore& store) {
  BoundParams bp;
  for (const Parameter& p : store.items()) {
    bp.vars[p.name] = make_leaf(p.tensor, p.trainable);
  }
  return bp;
}

GradCheckResult grad_check(ParameterStore& store, const LossBuilder& build_loss,
                           double epsilon) {
  if (!(epsilon > 0.0)) throw ContractError("grad_check: epsilon must be positive");
  BoundParams bound = bind_params(store);
  Var loss = build_loss(bound);
  if (!std::isfinite(loss->value(0))) throw NumericError("grad_check: non-finite loss");
  backward(loss);

  auto eval = [&]() {
    BoundParams bp = bind_params(store);
    const double v = build_loss(bp)->value(0);
    if (!std::isfinite(v)) throw NumericError("grad_check: non-finite loss");
    return v;
  };

  GradCheckResult result;
  for (Parameter& p : store.items()) {
    if (!p.trainable) continue;
    Var leaf = bound.at(p.name);
    for (std::size_t i = 0; i < p.tensor.numel(); ++i) {
      const double saved = p.tensor(i);
      p.tensor(i) = saved + epsilon;
      const double f_plus = eval();
      p.tensor(i) = saved - epsilon;
      const double f_minus = eval();
      p.tensor(i) = saved;
      const double numeric = (f_plus - f_minus) / (2.0 * epsilon);
      const double analytic = leaf->has_grad() ? leaf->grad()(i) : 0.0;
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      const double rel = std::abs(analytic - numeric) / denom;
      if (rel > result.max_rel_err) {
        result.max_rel_err = rel;
        result.worst_param = p.name;
        result.worst_index = i;
      }
    }
  }
  return result;
}

}  // namespace norad
