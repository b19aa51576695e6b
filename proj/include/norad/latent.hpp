#pragma once

#include "norad/autodiff.hpp"
#include "norad/tensor.hpp"

namespace norad {

/// Spike-and-slab prior over (C, V): c ~ Bernoulli(delta), v ~ Gaussian(u, s),
/// z = c (.) v. `s` is a standard deviation.
struct SpikeSlabPrior {
  double delta = 0.5;
  double u = 0.0;
  double s = 1.0;

  void validate() const;
};

/// Per-node variational parameters (values, not tape nodes).
struct VariationalParams {
  Tensor eta;    // n x K, strictly inside (0, 1)
  Tensor mu;     // n x K
  Tensor sigma;  // n x K, positive
};

/// A reparameterized draw; z = c (.) v holds exactly.
struct LatentSample {
  Tensor c;
  Tensor v;
  Tensor z;
};

/// Binary-concrete draw: sigmoid((logit(eta) + logit(noise)) / temperature).
/// Noise is supplied externally so draws can be frozen for gradient checks.
Var sample_relaxed_bernoulli(const Var& eta, double temperature, const Tensor& uniform_noise);

/// v = mu + sigma (.) noise.
Var sample_gaussian(const Var& mu, const Var& sigma, const Tensor& normal_noise);

/// Sum over entries of eta*log(eta/delta) + (1-eta)*log((1-eta)/(1-delta)).
Var kl_bernoulli(const Var& eta, double delta);

/// Sum over entries of log(s/sigma) + (sigma^2 + (mu-u)^2) / (2 s^2) - 1/2.
Var kl_gaussian(const Var& mu, const Var& sigma, double u, double s);

/// Exponential decay start*(floor/start)^(step/total_steps), clamped at floor.
double temperature_schedule(std::size_t step, std::size_t total_steps, double start,
                            double floor_temp);

}  // namespace norad
