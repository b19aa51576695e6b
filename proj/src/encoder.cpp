#include "norad/encoder.hpp"

#include "norad/errors.hpp"

namespace norad {

void init_encoder_params(ParameterStore& store, const EncoderConfig& cfg, RngStream& rng) {
  for (const char* name : kEncParamNames) {
    store.add(name, rng.glorot_tensor(cfg.input_dim, cfg.k));
  }
}

namespace {

Var head_preactivation(const CsrMatrix& a_norm, const CsrMatrix& x, const Var& w,
                       const Var& v, bool l2_normalize) {
  Var self_term = sparse_matmul(x, w);
  Var neighbor_term = sparse_matmul(a_norm, sparse_matmul(x, v));
  Var pre = add(self_term, neighbor_term);
  return l2_normalize ? row_l2_normalize(pre) : pre;
}

}  // namespace

EncoderOutput encode(const CsrMatrix& a_norm, const CsrMatrix& x, const BoundParams& params,
                     const EncoderConfig& cfg) {
  if (x.n_cols != cfg.input_dim) {
    throw DimensionError("encode: features have " + std::to_string(x.n_cols) +
                         " columns, config says " + std::to_string(cfg.input_dim));
  }
  if (a_norm.n_rows != x.n_rows) {
    throw DimensionError("encode: adjacency and features disagree on node count");
  }
  Var pre_eta = head_preactivation(a_norm, x, params.at("enc.eta.W"), params.at("enc.eta.V"),
                                   cfg.l2_normalize);
  Var pre_mu = head_preactivation(a_norm, x, params.at("enc.mu.W"), params.at("enc.mu.V"),
                                  cfg.l2_normalize);
  Var pre_ls = head_preactivation(a_norm, x, params.at("enc.logsigma.W"),
                                  params.at("enc.logsigma.V"), cfg.l2_normalize);
  EncoderOutput out;
  out.eta = clamp(sigmoid(pre_eta), 1e-6, 1.0 - 1e-6);
  out.mu = pre_mu;
  out.sigma = clamp(exp(affine(pre_ls, 0.5, 0.0)), 1e-4, 1e4);
  return out;
}

VariationalParams encode_values(const CsrMatrix& a_norm, const CsrMatrix& x,
                                const ParameterStore& store, const EncoderConfig& cfg) {
  BoundParams bound = bind_params(store);
  EncoderOutput out = encode(a_norm, x, bound, cfg);
  return VariationalParams{out.eta->value, out.mu->value, out.sigma->value};
}

Tensor deterministic_representation(const Tensor& eta, const Tensor& mu) {
  if (!eta.same_shape(mu)) {
    throw DimensionError("deterministic_representation: shape mismatch");
  }
  Tensor z(eta.shape());
  for (std::size_t i = 0; i < z.numel(); ++i) {
    z(i) = eta(i) > 0.5 ? mu(i) : 0.0;
  }
  return z;
}

}  // namespace norad
