#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "norad/autodiff.hpp"
#include "norad/rng.hpp"
#include "norad/tensor.hpp"

namespace norad {

/// Attention-based topic network: lambda = sigmoid(g^T Wq Wk^T U / sqrt(d''))
/// with g = relu(T^T z).
struct AtnConfig {
  std::size_t k = 256;
  std::size_t d_prime = 128;
  std::size_t d_dprime = 64;
  std::size_t attr_dim = 0;  // D
};

inline constexpr const char* kAtnParamNames[4] = {"atn.T", "atn.U", "atn.Wq", "atn.Wk"};

void init_atn_params(ParameterStore& store, const AtnConfig& cfg, RngStream& rng);

/// Value-level parameter bundle.
struct AtnParams {
  Tensor t;   // K x d'
  Tensor u;   // d' x D
  Tensor wq;  // d' x d''
  Tensor wk;  // d' x d''
};

AtnParams atn_params_from_store(const ParameterStore& store);

/// Pre-sigmoid attribute logits for a batch Z (n x K) or single row (K).
/// Wq Wk^T is formed once per call (algebraically identical to applying the
/// query/key projections per row).
Var attribute_logits(const Var& z, const Var& t, const Var& u, const Var& wq, const Var& wk);

/// lambda in (0,1)^D, clamped to [1e-6, 1-1e-6]; value-level forward.
Tensor attribute_probs(const Tensor& z, const AtnParams& params);

/// Sum of x*log(lambda) + (1-x)*log(1-lambda) over entries.
double attribute_log_likelihood(const Tensor& x, const Tensor& lambda);

/// Exact tape gradient of the single-row attribute log-likelihood wrt z.
Tensor rectification_gradient(const Tensor& z_row, const Tensor& x_row,
                              const AtnParams& params);

struct TopicEntry {
  std::size_t attribute = 0;
  std::string name;
  double mean_activation = 0.0;
};

struct TopicReport {
  std::size_t community = 0;
  std::size_t num_samples = 0;
  std::vector<double> mean_activation;  // per attribute
  std::vector<TopicEntry> top_words;    // sorted descending
};

struct TopicOptions {
  std::size_t top_m = 8;
  const std::vector<std::string>* attr_names = nullptr;
  /// Per-attribute document frequency; attributes with frequency above the
  /// ceiling are treated as non-semantic and dropped from the top list.
  const std::vector<double>* doc_freq = nullptr;
  double df_ceiling = 0.2;
};

/// Samples z = onehot(community) (.) v with v ~ N(0, I) and averages the
/// decoded attribute probabilities; deterministic given the seed.
TopicReport topic_distribution(std::size_t community, std::size_t num_samples,
                               std::uint64_t seed, const AtnParams& params,
                               const TopicOptions& options = {});

}  // namespace norad
