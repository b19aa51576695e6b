#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "norad/errors.hpp"
#include "norad/metrics.hpp"
#include "norad/rng.hpp"
#include "norad/synth.hpp"

using namespace norad;

TEST_CASE("planted_blockmodel") {
  Tensor b = planted_blockmodel(4, 3.0, -3.0);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) CHECK(b(i, j) == (i == j ? 3.0 : -3.0));
  }
}

TEST_CASE("planted_labels") {
  Tensor c = Tensor::matrix(3, 3, {0, 1, 0, 0, 0, 0, 1, 1, 0});
  Tensor z = Tensor::matrix(3, 3, {0, 2.0, 0, 0, 0, 0, -5.0, 1.0, 0});
  auto labels = planted_labels(c, z);
  CHECK(labels[0] == 1);  // one-hot row -> the hot index
  CHECK(labels[1] == 3);  // no active spike -> null class
  CHECK(labels[2] == 0);  // dominant |z| among active spikes

  // Permuting communities permutes labels consistently.
  Tensor cp = Tensor::matrix(3, 3, {1, 0, 0, 0, 0, 0, 1, 1, 0});
  Tensor zp = Tensor::matrix(3, 3, {2.0, 0, 0, 0, 0, 0, 1.0, -5.0, 0});
  auto permuted = planted_labels(cp, zp);
  CHECK(nmi(labels, permuted) == 1.0);
}

TEST_CASE("delta=0 gives half-density graphs") {
  SynthPreset preset;
  preset.n = 200;
  preset.k = 2;
  preset.delta = 1e-12;  // z = 0 almost surely -> every pair probability 0.5
  preset.attr_dim = 4;
  PlantedInstance inst = generate_preset(preset, 5);
  const double pairs = 200.0 * 199.0 / 2.0;
  const double density = static_cast<double>(inst.graph.edges.size()) / pairs;
  CHECK(std::abs(density - 0.5) < 0.02);
}

TEST_CASE("strongly negative diagonal gives a near-edgeless graph") {
  // delta -> 1: all spikes active; slab mean 2 keeps z_i z_j positive so the
  // negative block weight pushes every pair logit far below zero.
  SpikeSlabPrior prior{1.0 - 1e-12, 2.0, 0.1};
  Tensor b = planted_blockmodel(1, -40.0, -40.0);
  RngStream rng = rng_stream(3, "atn");
  AtnParams atn{rng.glorot_tensor(1, 4), rng.glorot_tensor(4, 8), rng.glorot_tensor(4, 2),
                rng.glorot_tensor(4, 2)};
  PlantedInstance inst = generate(200, prior, b, atn, 7);
  const double pairs = 200.0 * 199.0 / 2.0;
  CHECK(static_cast<double>(inst.graph.edges.size()) / pairs < 0.01);
}

TEST_CASE("determinism and structural invariants") {
  SynthPreset preset;
  preset.n = 80;
  preset.attr_dim = 16;
  PlantedInstance a = generate_preset(preset, 11);
  PlantedInstance b = generate_preset(preset, 11);
  CHECK(a.graph.edges == b.graph.edges);
  for (std::size_t i = 0; i < a.graph.features.numel(); ++i) {
    CHECK(a.graph.features(i) == b.graph.features(i));
  }
  CHECK(a.labels == b.labels);

  PlantedInstance c = generate_preset(preset, 12);
  CHECK(a.graph.edges != c.graph.edges);

  // No self loops, no duplicates, i<j; binary attributes; z = c (.) v.
  std::set<Edge> seen;
  for (const Edge& e : a.graph.edges) {
    CHECK(e.first < e.second);
    CHECK(e.second < 80);
    CHECK(seen.insert(e).second);
  }
  for (std::size_t i = 0; i < a.graph.features.numel(); ++i) {
    const double v = a.graph.features(i);
    CHECK((v == 0.0 || v == 1.0));
  }
  for (std::size_t i = 0; i < a.z_true.numel(); ++i) {
    if (a.c_true(i) == 0.0) CHECK(a.z_true(i) == 0.0);
  }
}

TEST_CASE("empirical density matches the planted probabilities") {
  SynthPreset preset;
  preset.n = 150;
  preset.attr_dim = 8;
  PlantedInstance inst = generate_preset(preset, 23);
  double mean_p = 0.0;
  const std::size_t n = preset.n, k = preset.k;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double logit = 0.0;
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t c = 0; c < k; ++c) {
          logit += inst.z_true(i, a) * inst.b_true(a, c) * inst.z_true(j, c);
        }
      }
      mean_p += 1.0 / (1.0 + std::exp(-logit));
    }
  }
  const double pairs = static_cast<double>(n) * (n - 1) / 2.0;
  mean_p /= pairs;
  const double se = std::sqrt(mean_p * (1.0 - mean_p) / pairs);
  const double density = static_cast<double>(inst.graph.edges.size()) / pairs;
  CHECK(std::abs(density - mean_p) < 3.0 * se + 1e-9);
}

TEST_CASE("community-blind control destroys label signal") {
  SynthPreset planted;
  planted.n = 120;
  planted.attr_dim = 8;
  SynthPreset blind = planted;
  blind.community_blind = true;
  PlantedInstance pi = generate_preset(planted, 31);
  PlantedInstance bi = generate_preset(blind, 31);
  // Clustering z_true carries label signal in the assortative case (five
  // clusters: four communities plus the spike-free null class).
  ClusterAssignment pc = kmeans(pi.z_true, 5, 1);
  CHECK(nmi(pc.assign, pi.labels) > 0.3);
  CHECK(bi.b_true(0, 1) == bi.b_true(0, 0));
}

TEST_CASE("save_instance writes loadable files") {
  namespace fs = std::filesystem;
  SynthPreset preset;
  preset.n = 25;
  preset.attr_dim = 6;
  PlantedInstance inst = generate_preset(preset, 41);
  const fs::path dir = fs::temp_directory_path() / "norad_synth_test";
  fs::remove_all(dir);
  save_instance(inst, dir.string());
  CHECK(fs::exists(dir / "edges.tsv"));
  CHECK(fs::exists(dir / "features.tsv"));
  CHECK(fs::exists(dir / "labels.tsv"));
  CHECK(fs::exists(dir / "planted.json"));

  FeatureTable t = load_features((dir / "features.tsv").string());
  EdgeList edges = load_edge_list((dir / "edges.tsv").string(), t.name_to_id);
  AttributedGraph g = make_graph(t, edges);
  CHECK(g.n == 25);
  CHECK(g.edges == inst.graph.edges);
  fs::remove_all(dir);
}
