#pragma once

#include "norad/autodiff.hpp"
#include "norad/latent.hpp"
#include "norad/rng.hpp"
#include "norad/sparse.hpp"

namespace norad {

/// One-layer GCN encoder with three separate heads producing the
/// variational parameters (eta, mu, sigma).
struct EncoderConfig {
  std::size_t input_dim = 0;  // D
  std::size_t k = 256;
  bool l2_normalize = false;
};

// Parameter names used in the store.
inline constexpr const char* kEncParamNames[6] = {
    "enc.eta.W", "enc.eta.V", "enc.mu.W", "enc.mu.V", "enc.logsigma.W", "enc.logsigma.V"};

/// Glorot-uniform initialization of the six encoder weight matrices (D x K).
void init_encoder_params(ParameterStore& store, const EncoderConfig& cfg, RngStream& rng);

struct EncoderOutput {
  Var eta;    // clamped sigmoid head
  Var mu;     // linear head
  Var sigma;  // exp(half log-variance head), clamped
};

/// Pre-activation per head: X W_h + A~ (X V_h), heads applied on the linear
/// output. `x` is the sparse binary feature matrix.
EncoderOutput encode(const CsrMatrix& a_norm, const CsrMatrix& x, const BoundParams& params,
                     const EncoderConfig& cfg);

/// Value-level convenience wrapper (no gradients retained).
VariationalParams encode_values(const CsrMatrix& a_norm, const CsrMatrix& x,
                                const ParameterStore& store, const EncoderConfig& cfg);

/// Z0 = mu (.) 1(eta > 0.5); ties at exactly 0.5 map to zero.
Tensor deterministic_representation(const Tensor& eta, const Tensor& mu);

}  // namespace norad
