#include "norad/synth.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "norad/errors.hpp"
#include "norad/rng.hpp"

namespace norad {

namespace {

nlohmann::json tensor_to_json(const Tensor& t) {
  return {{"shape", t.shape()}, {"data", t.storage()}};
}

}  // namespace

Tensor planted_blockmodel(std::size_t k, double diag, double offdiag) {
  Tensor b = Tensor::full({k, k}, offdiag);
  for (std::size_t i = 0; i < k; ++i) b(i, i) = diag;
  return b;
}

std::vector<int> planted_labels(const Tensor& c, const Tensor& z) {
  if (!c.same_shape(z)) throw DimensionError("planted_labels: c and z shape mismatch");
  const std::size_t n = c.rows();
  const std::size_t k = c.cols();
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    int best = static_cast<int>(k);  // null class when no spike is active
    double best_mag = -1.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (c(i, j) == 0.0) continue;
      const double mag = std::abs(z(i, j));
      if (mag > best_mag) {
        best_mag = mag;
        best = static_cast<int>(j);
      }
    }
    labels[i] = best;
  }
  return labels;
}

PlantedInstance generate_from_latents(const Tensor& z_true, const Tensor& b_true,
                                      const AtnParams& atn_true, std::uint64_t seed) {
  const std::size_t n = z_true.rows();
  const std::size_t k = b_true.rows();
  if (b_true.cols() != k) throw DimensionError("generate: b_true must be square");
  if (z_true.cols() != k) throw DimensionError("generate: z_true width must match blockmodel");
  if (atn_true.t.rows() != k) {
    throw DimensionError("generate: atn_true expects K=" + std::to_string(atn_true.t.rows()) +
                         ", blockmodel has K=" + std::to_string(k));
  }
  const std::size_t attr_dim = atn_true.u.cols();

  PlantedInstance inst;
  inst.seed = seed;
  inst.b_true = b_true;
  inst.atn_true = atn_true;
  inst.z_true = z_true;
  inst.c_true = Tensor::zeros({n, k});
  for (std::size_t i = 0; i < z_true.numel(); ++i) {
    inst.c_true(i) = z_true(i) != 0.0 ? 1.0 : 0.0;
  }
  inst.labels = planted_labels(inst.c_true, inst.z_true);

  RngStream edge_rng = rng_stream(seed, "synth/edges");
  EdgeList edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double logit = 0.0;
      for (std::size_t a = 0; a < k; ++a) {
        double row = 0.0;
        for (std::size_t c = 0; c < k; ++c) row += b_true(a, c) * inst.z_true(j, c);
        logit += inst.z_true(i, a) * row;
      }
      const double p = 1.0 / (1.0 + std::exp(-logit));
      if (edge_rng.uniform() < p) {
        edges.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
      }
    }
  }

  RngStream attr_rng = rng_stream(seed, "synth/attrs");
  Tensor features({n, attr_dim});
  Tensor z_row({k});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) z_row(j) = inst.z_true(i, j);
    const Tensor probs = attribute_probs(z_row, atn_true);
    for (std::size_t d = 0; d < attr_dim; ++d) {
      features(i, d) = attr_rng.uniform() < probs(d) ? 1.0 : 0.0;
    }
  }

  inst.graph.n = n;
  inst.graph.edges = std::move(edges);
  inst.graph.features = std::move(features);
  inst.graph.labels = inst.labels;
  for (std::size_t c = 0; c <= k; ++c) inst.graph.label_names.push_back(std::to_string(c));
  return inst;
}

PlantedInstance generate(std::size_t n, const SpikeSlabPrior& prior, const Tensor& b_true,
                         const AtnParams& atn_true, std::uint64_t seed) {
  prior.validate();
  const std::size_t k = b_true.rows();
  if (b_true.cols() != k) throw DimensionError("generate: b_true must be square");

  Tensor z_true = Tensor::zeros({n, k});
  RngStream prior_rng = rng_stream(seed, "synth/prior");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double c = prior_rng.uniform() < prior.delta ? 1.0 : 0.0;
      const double v = prior.u + prior.s * prior_rng.normal();
      z_true(i, j) = c * v;
    }
  }
  return generate_from_latents(z_true, b_true, atn_true, seed);
}

PlantedInstance generate_preset(const SynthPreset& preset, std::uint64_t seed) {
  SpikeSlabPrior prior{preset.delta, preset.slab_u, preset.slab_s};
  // Blind control: diag == offdiag removes all community signal; zero keeps
  // the pair probabilities moderate regardless of the slab location.
  Tensor b = preset.community_blind ? Tensor::zeros({preset.k, preset.k})
                                    : planted_blockmodel(preset.k, preset.diag, preset.offdiag);
  RngStream atn_rng = rng_stream(seed, "synth/atn");
  AtnParams atn{atn_rng.glorot_tensor(preset.k, preset.d_prime),
                atn_rng.glorot_tensor(preset.d_prime, preset.attr_dim),
                atn_rng.glorot_tensor(preset.d_prime, preset.d_dprime),
                atn_rng.glorot_tensor(preset.d_prime, preset.d_dprime)};
  for (std::size_t i = 0; i < atn.t.numel(); ++i) atn.t(i) *= preset.atn_scale;
  for (std::size_t i = 0; i < atn.u.numel(); ++i) atn.u(i) *= preset.atn_scale;
  return generate(preset.n, prior, b, atn, seed);
}

void save_instance(const PlantedInstance& inst, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto file = [&](const char* name) { return (fs::path(dir) / name).string(); };
  write_edge_list(file("edges.tsv"), inst.graph.edges);
  write_features(file("features.tsv"), inst.graph);
  write_labels(file("labels.tsv"), inst.graph);

  nlohmann::json sidecar = {{"version", 1},
                            {"seed", inst.seed},
                            {"labels", inst.labels},
                            {"z_true", tensor_to_json(inst.z_true)},
                            {"c_true", tensor_to_json(inst.c_true)},
                            {"b_true", tensor_to_json(inst.b_true)},
                            {"atn_true",
                             {{"T", tensor_to_json(inst.atn_true.t)},
                              {"U", tensor_to_json(inst.atn_true.u)},
                              {"Wq", tensor_to_json(inst.atn_true.wq)},
                              {"Wk", tensor_to_json(inst.atn_true.wk)}}}};
  std::ofstream out(file("planted.json"));
  if (!out) throw IoError("cannot write planted.json under " + dir);
  out << sidecar.dump(2) << "\n";
}

}  // namespace norad
