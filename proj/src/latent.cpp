#include "norad/latent.hpp"

#include <cmath>

#include "norad/errors.hpp"

namespace norad {

void SpikeSlabPrior::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("prior: delta must be in (0,1)");
  if (!(s > 0.0)) throw DomainError("prior: slab stddev must be positive");
}

Var sample_relaxed_bernoulli(const Var& eta, double temperature, const Tensor& uniform_noise) {
  if (!(temperature > 0.0)) throw ContractError("relaxed bernoulli: temperature must be > 0");
  if (!eta->value.same_shape(uniform_noise)) {
    throw DimensionError("relaxed bernoulli: noise shape mismatch");
  }
  Tensor noise_logit(uniform_noise.shape());
  for (std::size_t i = 0; i < uniform_noise.numel(); ++i) {
    const double u = uniform_noise(i);
    if (!(u > 0.0 && u < 1.0)) {
      throw DomainError("relaxed bernoulli: noise must be strictly inside (0,1)");
    }
    noise_logit(i) = std::log(u) - std::log1p(-u);
  }
  Var eta_logit = sub(log(eta), log(affine(eta, -1.0, 1.0)));
  Var shifted = add(eta_logit, constant(std::move(noise_logit)));
  return sigmoid(scale(shifted, 1.0 / temperature));
}

Var sample_gaussian(const Var& mu, const Var& sigma, const Tensor& normal_noise) {
  if (!mu->value.same_shape(normal_noise)) {
    throw DimensionError("gaussian sample: noise shape mismatch");
  }
  return add(mu, hadamard(sigma, constant(normal_noise)));
}

Var kl_bernoulli(const Var& eta, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("kl_bernoulli: delta must be in (0,1)");
  Var one_minus = affine(eta, -1.0, 1.0);
  Var pos = hadamard(eta, affine(log(eta), 1.0, -std::log(delta)));
  Var neg = hadamard(one_minus, affine(log(one_minus), 1.0, -std::log1p(-delta)));
  return sum(add(pos, neg));
}

Var kl_gaussian(const Var& mu, const Var& sigma, double u, double s) {
  if (!(s > 0.0)) throw DomainError("kl_gaussian: prior stddev must be positive");
  const double inv_2s2 = 1.0 / (2.0 * s * s);
  Var log_ratio = affine(log(sigma), -1.0, std::log(s));
  Var var_term = scale(hadamard(sigma, sigma), inv_2s2);
  Var centered = affine(mu, 1.0, -u);
  Var mean_term = scale(hadamard(centered, centered), inv_2s2);
  Var per_entry = affine(add(log_ratio, add(var_term, mean_term)), 1.0, -0.5);
  return sum(per_entry);
}

double temperature_schedule(std::size_t step, std::size_t total_steps, double start,
                            double floor_temp) {
  if (!(floor_temp > 0.0) || start < floor_temp) {
    throw ContractError("temperature schedule: need start >= floor > 0");
  }
  if (total_steps == 0 || step >= total_steps) return floor_temp;
  const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
  const double t = start * std::pow(floor_temp / start, frac);
  return std::max(t, floor_temp);
}

}  // namespace norad
