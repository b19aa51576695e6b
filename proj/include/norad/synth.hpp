#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "norad/atn.hpp"
#include "norad/graph.hpp"
#include "norad/latent.hpp"

namespace norad {

/// A graph sampled from the model's own generative process, with the latent
/// state that produced it (ground truth for recovery tests).
struct PlantedInstance {
  AttributedGraph graph;
  Tensor z_true;   // n x K
  Tensor c_true;   // n x K, binary
  Tensor b_true;   // K x K
  AtnParams atn_true;
  std::vector<int> labels;  // dominant community per node, K = null class
  std::uint64_t seed = 0;
};

/// K x K blockmodel with `diag` on the diagonal and `offdiag` elsewhere.
Tensor planted_blockmodel(std::size_t k, double diag, double offdiag);

/// Class of each node: argmax_k |z_ik| among active spikes (ties -> lowest
/// index); rows with no active spike map to the extra class K.
std::vector<int> planted_labels(const Tensor& c, const Tensor& z);

/// Samples the observable graph from fixed latents: one edge draw per
/// unordered pair with p = sigmoid(z_i^T B z_j); binary attributes from the
/// attribute decoder. c_true is the nonzero mask of z_true. Deterministic.
PlantedInstance generate_from_latents(const Tensor& z_true, const Tensor& b_true,
                                      const AtnParams& atn_true, std::uint64_t seed);

/// Samples C ~ Bernoulli(delta), V ~ N(u, s^2), Z = C (.) V, then the
/// observables as in generate_from_latents. Deterministic given the seed.
PlantedInstance generate(std::size_t n, const SpikeSlabPrior& prior, const Tensor& b_true,
                         const AtnParams& atn_true, std::uint64_t seed);

/// Minute-scale recovery preset; `community_blind` plants diag == offdiag.
struct SynthPreset {
  std::size_t n = 200;
  std::size_t k = 4;
  double delta = 0.5;
  double slab_u = 1.2;  // slab mean > 0 makes the planted blocks assortative
  double slab_s = 0.4;
  double diag = 4.0;
  double offdiag = -4.0;
  std::size_t d_prime = 16;
  std::size_t d_dprime = 8;
  std::size_t attr_dim = 64;
  /// Multiplier on the planted decoder weights; > 1 makes the attributes
  /// informative about community membership instead of near-uniform noise.
  double atn_scale = 3.0;
  bool community_blind = false;
};

PlantedInstance generate_preset(const SynthPreset& preset, std::uint64_t seed);

/// Writes edges.tsv / features.tsv / labels.tsv plus a planted.json sidecar
/// (z_true, c_true, b_true, labels, decoder weights) under `dir`.
void save_instance(const PlantedInstance& inst, const std::string& dir);

}  // namespace norad
