#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "norad/encoder.hpp"
#include "norad/errors.hpp"
#include "norad/graph.hpp"
#include "norad/rng.hpp"

using namespace norad;

namespace {

struct Fixture {
  std::size_t n = 6, d = 5, k = 3;
  EdgeList edges{{0, 1}, {1, 2}, {2, 3}, {4, 5}};
  Tensor features;
  CsrMatrix a_norm, x;
  EncoderConfig cfg;
  ParameterStore store;

  explicit Fixture(std::uint64_t seed = 7, bool zero_weights = false) {
    RngStream rng = rng_stream(seed, "encfix");
    features = Tensor::zeros({n, d});
    for (std::size_t i = 0; i < features.numel(); ++i) {
      features(i) = rng.uniform() < 0.4 ? 1.0 : 0.0;
    }
    a_norm = normalized_adjacency(edges, n);
    x = CsrMatrix::from_dense(features);
    cfg = EncoderConfig{d, k, false};
    init_encoder_params(store, cfg, rng);
    if (zero_weights) {
      for (Parameter& p : store.items()) p.tensor.fill(0.0);
    }
  }
};

}  // namespace

TEST_CASE("zero weights give the prior-neutral output") {
  Fixture f(3, true);
  VariationalParams vp = encode_values(f.a_norm, f.x, f.store, f.cfg);
  for (std::size_t i = 0; i < vp.eta.numel(); ++i) {
    CHECK(vp.eta(i) == 0.5);
    CHECK(vp.mu(i) == 0.0);
    CHECK(vp.sigma(i) == 1.0);
  }
}

TEST_CASE("edgeless graph reduces to X(W+V) per head") {
  Fixture f(11);
  CsrMatrix eye_norm = normalized_adjacency({}, f.n);
  VariationalParams vp = encode_values(eye_norm, f.x, f.store, f.cfg);

  // Oracle: mu head as X (W + V) by explicit loops.
  const Tensor& w = f.store.get("enc.mu.W").tensor;
  const Tensor& v = f.store.get("enc.mu.V").tensor;
  for (std::size_t i = 0; i < f.n; ++i) {
    for (std::size_t j = 0; j < f.k; ++j) {
      double expect = 0.0;
      for (std::size_t t = 0; t < f.d; ++t) {
        expect += f.features(i, t) * (w(t, j) + v(t, j));
      }
      CHECK(vp.mu(i, j) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("encoder output ranges") {
  Fixture f(19);
  VariationalParams vp = encode_values(f.a_norm, f.x, f.store, f.cfg);
  for (std::size_t i = 0; i < vp.eta.numel(); ++i) {
    CHECK(vp.eta(i) > 0.0);
    CHECK(vp.eta(i) < 1.0);
    CHECK(vp.sigma(i) > 0.0);
    CHECK(std::isfinite(vp.sigma(i)));
  }
}

TEST_CASE("permutation equivariance") {
  Fixture f(23);
  VariationalParams base = encode_values(f.a_norm, f.x, f.store, f.cfg);

  // Random permutation of node ids.
  std::vector<std::uint32_t> perm(f.n);
  std::iota(perm.begin(), perm.end(), 0);
  RngStream rng = rng_stream(5, "perm");
  for (std::size_t i = f.n; i > 1; --i) {
    std::swap(perm[i - 1], perm[rng.uniform_int(i)]);
  }
  Tensor pf = Tensor::zeros({f.n, f.d});
  for (std::size_t i = 0; i < f.n; ++i) {
    for (std::size_t j = 0; j < f.d; ++j) pf(perm[i], j) = f.features(i, j);
  }
  EdgeList pe;
  for (auto [a, b] : f.edges) {
    std::uint32_t pa = perm[a], pb = perm[b];
    if (pa > pb) std::swap(pa, pb);
    pe.emplace_back(pa, pb);
  }
  std::sort(pe.begin(), pe.end());
  CsrMatrix pa_norm = normalized_adjacency(pe, f.n);
  CsrMatrix px = CsrMatrix::from_dense(pf);
  VariationalParams permuted = encode_values(pa_norm, px, f.store, f.cfg);
  for (std::size_t i = 0; i < f.n; ++i) {
    for (std::size_t j = 0; j < f.k; ++j) {
      CHECK(permuted.eta(perm[i], j) == doctest::Approx(base.eta(i, j)).epsilon(1e-12));
      CHECK(permuted.mu(perm[i], j) == doctest::Approx(base.mu(i, j)).epsilon(1e-12));
      CHECK(permuted.sigma(perm[i], j) == doctest::Approx(base.sigma(i, j)).epsilon(1e-12));
    }
  }
}

TEST_CASE("encoder gradients vs finite differences") {
  Fixture f(31);
  auto build = [&f](BoundParams& bp) {
    EncoderOutput out = encode(f.a_norm, f.x, bp, f.cfg);
    return sum(add(add(out.eta, out.mu), out.sigma));
  };
  CHECK(grad_check(f.store, build, 1e-6).max_rel_err < 1e-5);
}

TEST_CASE("deterministic representation thresholds strictly") {
  Tensor eta = Tensor::matrix(1, 4, {1.0, 0.0, 0.6, 0.5});
  Tensor mu = Tensor::matrix(1, 4, {7.0, 7.0, 2.0, 3.0});
  Tensor z = deterministic_representation(eta, mu);
  CHECK(z(0, 0) == 7.0);
  CHECK(z(0, 1) == 0.0);
  CHECK(z(0, 2) == 2.0);
  CHECK(z(0, 3) == 0.0);  // tie at exactly 0.5 maps to zero

  Tensor all1 = Tensor::full({1, 4}, 1.0);
  Tensor z1 = deterministic_representation(all1, mu);
  for (std::size_t i = 0; i < 4; ++i) CHECK(z1(i) == mu(i));
  Tensor all0 = Tensor::zeros({1, 4});
  Tensor z0 = deterministic_representation(all0, mu);
  for (std::size_t i = 0; i < 4; ++i) CHECK(z0(i) == 0.0);

  CHECK_THROWS_AS(deterministic_representation(Tensor::zeros({1, 3}), mu), DimensionError);
}

TEST_CASE("sparsity pattern equals the threshold mask") {
  Fixture f(43);
  VariationalParams vp = encode_values(f.a_norm, f.x, f.store, f.cfg);
  Tensor z = deterministic_representation(vp.eta, vp.mu);
  for (std::size_t i = 0; i < z.numel(); ++i) {
    if (vp.eta(i) > 0.5) {
      CHECK(z(i) == vp.mu(i));
    } else {
      CHECK(z(i) == 0.0);
    }
  }
}
