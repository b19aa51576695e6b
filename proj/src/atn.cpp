#include "norad/atn.hpp"

#include <algorithm>
#include <cmath>

#include "norad/errors.hpp"

namespace norad {

void init_atn_params(ParameterStore& store, const AtnConfig& cfg, RngStream& rng) {
  store.add("atn.T", rng.glorot_tensor(cfg.k, cfg.d_prime));
  store.add("atn.U", rng.glorot_tensor(cfg.d_prime, cfg.attr_dim));
  store.add("atn.Wq", rng.glorot_tensor(cfg.d_prime, cfg.d_dprime));
  store.add("atn.Wk", rng.glorot_tensor(cfg.d_prime, cfg.d_dprime));
}

AtnParams atn_params_from_store(const ParameterStore& store) {
  return AtnParams{store.get("atn.T").tensor, store.get("atn.U").tensor,
                   store.get("atn.Wq").tensor, store.get("atn.Wk").tensor};
}

Var attribute_logits(const Var& z, const Var& t, const Var& u, const Var& wq, const Var& wk) {
  if (z->value.cols() != t->value.rows()) {
    throw DimensionError("attribute_logits: z has " + std::to_string(z->value.cols()) +
                         " columns, T expects " + std::to_string(t->value.rows()));
  }
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(wq->value.cols()));
  Var g = relu(matmul(z, t));          // n x d'
  Var attn = matmul(wq, wk, false, true);  // d' x d'
  return scale(matmul(matmul(g, attn), u), inv_sqrt);
}

Tensor attribute_probs(const Tensor& z, const AtnParams& params) {
  Var logits = attribute_logits(constant(z), constant(params.t), constant(params.u),
                                constant(params.wq), constant(params.wk));
  Tensor probs(logits->value.shape());
  for (std::size_t i = 0; i < probs.numel(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-logits->value(i)));
    probs(i) = std::min(std::max(p, 1e-6), 1.0 - 1e-6);
  }
  return probs;
}

double attribute_log_likelihood(const Tensor& x, const Tensor& lambda) {
  if (!x.same_shape(lambda)) {
    throw DimensionError("attribute_log_likelihood: shape mismatch");
  }
  double ll = 0.0;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double p = lambda(i);
    if (!(p > 0.0 && p < 1.0)) {
      throw DomainError("attribute_log_likelihood: probability outside (0,1)");
    }
    ll += x(i) * std::log(p) + (1.0 - x(i)) * std::log1p(-p);
  }
  return ll;
}

Tensor rectification_gradient(const Tensor& z_row, const Tensor& x_row,
                              const AtnParams& params) {
  Var z = make_leaf(z_row, true);
  Var logits = attribute_logits(z, constant(params.t), constant(params.u),
                                constant(params.wq), constant(params.wk));
  Var ll = bernoulli_logits_ll(logits, x_row);
  backward(ll);
  return z->has_grad() ? z->grad() : Tensor::zeros(z_row.shape());
}

TopicReport topic_distribution(std::size_t community, std::size_t num_samples,
                               std::uint64_t seed, const AtnParams& params,
                               const TopicOptions& options) {
  const std::size_t k = params.t.rows();
  const std::size_t d = params.u.cols();
  if (community >= k) {
    throw IndexError("topic_distribution: community " + std::to_string(community) +
                     " out of range for K=" + std::to_string(k));
  }
  if (num_samples < 1) throw ContractError("topic_distribution: num_samples >= 1");

  TopicReport report;
  report.community = community;
  report.num_samples = num_samples;
  report.mean_activation.assign(d, 0.0);
  Tensor z({k});
  for (std::size_t s = 0; s < num_samples; ++s) {
    // Per-sample stream keeps the result independent of evaluation order.
    RngStream rng = rng_stream(seed, "topic/" + std::to_string(community) + "/" +
                                         std::to_string(s));
    z.fill(0.0);
    z(community) = rng.normal();
    Tensor probs = attribute_probs(z, params);
    for (std::size_t i = 0; i < d; ++i) report.mean_activation[i] += probs(i);
  }
  for (double& v : report.mean_activation) v /= static_cast<double>(num_samples);

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < d; ++i) {
    if (options.doc_freq != nullptr && (*options.doc_freq)[i] > options.df_ceiling) continue;
    order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return report.mean_activation[a] > report.mean_activation[b];
  });
  const std::size_t m = std::min(options.top_m, order.size());
  for (std::size_t i = 0; i < m; ++i) {
    TopicEntry entry;
    entry.attribute = order[i];
    entry.mean_activation = report.mean_activation[order[i]];
    entry.name = (options.attr_names != nullptr && order[i] < options.attr_names->size())
                     ? (*options.attr_names)[order[i]]
                     : "w" + std::to_string(order[i]);
    report.top_words.push_back(std::move(entry));
  }
  return report;
}

}  // namespace norad
