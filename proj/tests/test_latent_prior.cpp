#include <doctest.h>

#include <cmath>

#include "norad/autodiff.hpp"
#include "norad/errors.hpp"
#include "norad/latent.hpp"
#include "norad/rng.hpp"

using namespace norad;

TEST_CASE("prior validation") {
  SpikeSlabPrior ok{0.5, 0.0, 1.0};
  CHECK_NOTHROW(ok.validate());
  CHECK_THROWS_AS((SpikeSlabPrior{0.0, 0.0, 1.0}).validate(), DomainError);
  CHECK_THROWS_AS((SpikeSlabPrior{1.0, 0.0, 1.0}).validate(), DomainError);
  CHECK_THROWS_AS((SpikeSlabPrior{0.5, 0.0, 0.0}).validate(), DomainError);
}

TEST_CASE("relaxed bernoulli point values") {
  Var eta = constant(Tensor::scalar(0.5));
  for (double tau : {0.1, 0.7, 2.0}) {
    Var c = sample_relaxed_bernoulli(eta, tau, Tensor::scalar(0.5));
    CHECK(c->value(0) == doctest::Approx(0.5).epsilon(1e-14));
  }
  Var eta9 = constant(Tensor::scalar(0.9));
  Var c = sample_relaxed_bernoulli(eta9, 0.01, Tensor::scalar(0.5));
  CHECK(c->value(0) > 0.99);

  CHECK_THROWS_AS(sample_relaxed_bernoulli(eta, 0.0, Tensor::scalar(0.5)), ContractError);
  CHECK_THROWS_AS(sample_relaxed_bernoulli(eta, 0.5, Tensor::scalar(0.0)), DomainError);
  CHECK_THROWS_AS(sample_relaxed_bernoulli(eta, 0.5, Tensor::scalar(1.0)), DomainError);
}

TEST_CASE("relaxed bernoulli stays interior and is differentiable") {
  RngStream rng = rng_stream(3, "interior");
  Var eta = constant(Tensor::scalar(0.7));
  for (int i = 0; i < 200; ++i) {
    Var c = sample_relaxed_bernoulli(eta, 0.5, Tensor::scalar(rng.uniform()));
    CHECK(c->value(0) > 0.0);
    CHECK(c->value(0) < 1.0);
  }
  // Gradient wrt eta via finite differences on a frozen draw.
  const Tensor noise = Tensor::scalar(0.3);
  ParameterStore store;
  store.add("eta", Tensor::scalar(0.7));
  auto build = [&noise](BoundParams& bp) {
    return sum(sample_relaxed_bernoulli(bp.at("eta"), 0.7, noise));
  };
  CHECK(grad_check(store, build, 1e-6).max_rel_err < 1e-6);
}

TEST_CASE("relaxed bernoulli Monte-Carlo self-consistency") {
  const std::size_t trials = 100000;
  double means[2] = {0.0, 0.0};
  for (int s = 0; s < 2; ++s) {
    RngStream rng = rng_stream(100 + s, "mc");
    Var eta = constant(Tensor::scalar(0.7));
    double acc = 0.0;
    for (std::size_t i = 0; i < trials; ++i) {
      acc += sample_relaxed_bernoulli(eta, 0.5, Tensor::scalar(rng.uniform()))->value(0);
    }
    means[s] = acc / static_cast<double>(trials);
  }
  CHECK(std::abs(means[0] - means[1]) < 0.02);
}

TEST_CASE("gaussian reparameterization") {
  Var mu = constant(Tensor::row({1.0, -2.0}));
  Var sigma = constant(Tensor::row({0.5, 2.0}));
  Tensor zero = Tensor::zeros({2});
  Var v = sample_gaussian(mu, sigma, zero);
  CHECK(v->value(0) == 1.0);
  CHECK(v->value(1) == -2.0);

  Tensor noise = Tensor::row({0.3, -1.2});
  Var v2 = sample_gaussian(constant(Tensor::zeros({2})), constant(Tensor::row({1, 1})), noise);
  CHECK(v2->value(0) == 0.3);
  CHECK(v2->value(1) == -1.2);

  // Empirical stddev over many draws matches sigma within 2%.
  RngStream rng = rng_stream(9, "gauss");
  const std::size_t trials = 100000;
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < trials; ++i) {
    const double draw =
        sample_gaussian(constant(Tensor::scalar(0.0)), constant(Tensor::scalar(1.7)),
                        Tensor::scalar(rng.normal()))
            ->value(0);
    s1 += draw;
    s2 += draw * draw;
  }
  const double mean = s1 / trials;
  const double stddev = std::sqrt(s2 / trials - mean * mean);
  CHECK(stddev == doctest::Approx(1.7).epsilon(0.02));
}

TEST_CASE("kl_bernoulli values") {
  CHECK(kl_bernoulli(constant(Tensor::scalar(0.5)), 0.5)->value(0) ==
        doctest::Approx(0.0).epsilon(1e-14));
  const double expect = 0.9 * std::log(1.8) + 0.1 * std::log(0.2);
  CHECK(kl_bernoulli(constant(Tensor::scalar(0.9)), 0.5)->value(0) ==
        doctest::Approx(expect).epsilon(1e-12));
  CHECK(expect == doctest::Approx(0.3681).epsilon(1e-3));
  CHECK(kl_bernoulli(constant(Tensor::scalar(1.0 - 1e-12)), 0.5)->value(0) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("kl_gaussian values") {
  Var mu = constant(Tensor::scalar(0.0));
  Var sigma = constant(Tensor::scalar(1.0));
  CHECK(kl_gaussian(mu, sigma, 0.0, 1.0)->value(0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(kl_gaussian(constant(Tensor::scalar(1.0)), sigma, 0.0, 1.0)->value(0) ==
        doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("kl_gaussian matches Monte-Carlo estimate") {
  const double mu = 0.7, sigma = 1.4, u = -0.3, s = 2.0;
  const double analytic =
      kl_gaussian(constant(Tensor::scalar(mu)), constant(Tensor::scalar(sigma)), u, s)->value(0);
  RngStream rng = rng_stream(41, "klmc");
  const std::size_t trials = 200000;
  double acc = 0.0, acc2 = 0.0;
  for (std::size_t i = 0; i < trials; ++i) {
    const double x = mu + sigma * rng.normal();
    const double logq = -0.5 * std::log(2 * M_PI) - std::log(sigma) -
                        0.5 * (x - mu) * (x - mu) / (sigma * sigma);
    const double logp =
        -0.5 * std::log(2 * M_PI) - std::log(s) - 0.5 * (x - u) * (x - u) / (s * s);
    const double d = logq - logp;
    acc += d;
    acc2 += d * d;
  }
  const double mc = acc / trials;
  const double se = std::sqrt((acc2 / trials - mc * mc) / trials);
  CHECK(std::abs(analytic - mc) < 3.0 * se);
}

TEST_CASE("kl nonnegativity property") {
  RngStream rng = rng_stream(55, "klprop");
  for (int i = 0; i < 200; ++i) {
    const double eta = 0.01 + 0.98 * rng.uniform();
    const double delta = 0.01 + 0.98 * rng.uniform();
    CHECK(kl_bernoulli(constant(Tensor::scalar(eta)), delta)->value(0) >= -1e-12);
    const double mu = 3.0 * rng.normal();
    const double sigma = 0.1 + 3.0 * rng.uniform();
    const double u = 3.0 * rng.normal();
    const double s = 0.1 + 3.0 * rng.uniform();
    CHECK(kl_gaussian(constant(Tensor::scalar(mu)), constant(Tensor::scalar(sigma)), u, s)
              ->value(0) >= -1e-12);
  }
}

TEST_CASE("z composition is exact") {
  RngStream rng = rng_stream(77, "zcomp");
  Var eta = constant(rng.uniform_tensor({3, 4}));
  Var mu = constant(rng.normal_tensor({3, 4}));
  Var sigma = constant(Tensor::full({3, 4}, 0.8));
  Var c = sample_relaxed_bernoulli(eta, 0.7, rng.uniform_tensor({3, 4}));
  Var v = sample_gaussian(mu, sigma, rng.normal_tensor({3, 4}));
  Var z = hadamard(c, v);
  for (std::size_t i = 0; i < 12; ++i) CHECK(z->value(i) == c->value(i) * v->value(i));
}

TEST_CASE("temperature schedule") {
  CHECK(temperature_schedule(0, 100, 1.0, 0.5) == 1.0);
  CHECK(temperature_schedule(100, 100, 1.0, 0.5) == 0.5);
  CHECK(temperature_schedule(150, 100, 1.0, 0.5) == 0.5);
  CHECK(temperature_schedule(50, 100, 1.0, 0.5) ==
        doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK_THROWS_AS(temperature_schedule(0, 10, 0.4, 0.5), ContractError);
}
