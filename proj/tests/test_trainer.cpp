#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "norad/checkpoint.hpp"
#include "norad/errors.hpp"
#include "norad/rng.hpp"
#include "norad/synth.hpp"
#include "norad/trainer.hpp"

using namespace norad;

namespace {

PlantedInstance small_instance(std::uint64_t seed = 3) {
  SynthPreset preset;
  preset.n = 60;
  preset.k = 3;
  preset.attr_dim = 12;
  preset.d_prime = 6;
  preset.d_dprime = 3;
  return generate_preset(preset, seed);
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.k = 6;
  cfg.d_prime = 8;
  cfg.d_dprime = 4;
  cfg.outer_rounds = 3;
  cfg.seed = 17;
  return cfg;
}

}  // namespace

TEST_CASE("adam_update basics") {
  // First step on a unit gradient moves by exactly lr.
  Tensor p = Tensor::scalar(5.0);
  AdamSlot slot;
  adam_update(p, Tensor::scalar(1.0), slot, 0.01);
  // First bias-corrected step on a unit gradient is lr / (1 + eps).
  CHECK(p(0) == doctest::Approx(5.0 + 0.01 / (1.0 + kAdamEps)).epsilon(1e-14));

  // Zero gradient forever keeps the parameter constant.
  Tensor q = Tensor::scalar(2.0);
  AdamSlot qslot;
  for (int i = 0; i < 50; ++i) adam_update(q, Tensor::scalar(0.0), qslot, 0.1);
  CHECK(q(0) == 2.0);

  // Quadratic bowl -|p|^2: ascent on gradient -2p converges toward 0.
  Tensor r = Tensor::scalar(1.0);
  AdamSlot rslot;
  for (int i = 0; i < 500; ++i) adam_update(r, Tensor::scalar(-2.0 * r(0)), rslot, 0.01);
  CHECK(std::abs(r(0)) < 0.05);
}

TEST_CASE("config validation and JSON round trip") {
  TrainConfig cfg = small_config();
  cfg.alpha = 2.5;
  cfg.decoder_mode = DecoderMode::identity_b;
  nlohmann::json j = cfg;
  TrainConfig back = j.get<TrainConfig>();
  CHECK(back.alpha == cfg.alpha);
  CHECK(back.k == cfg.k);
  CHECK(back.decoder_mode == DecoderMode::identity_b);
  CHECK(back.seed == cfg.seed);

  TrainConfig bad = small_config();
  bad.alpha = -1.0;
  CHECK_THROWS_AS(bad.validate(), ContractError);
  bad = small_config();
  bad.t_e = 0;
  CHECK_THROWS_AS(bad.validate(), ContractError);
  bad = small_config();
  bad.temp_floor = 0.0;
  CHECK_THROWS_AS(bad.validate(), ContractError);

  // Partial JSON fills remaining fields with defaults.
  TrainConfig partial = nlohmann::json{{"alpha", 3.0}}.get<TrainConfig>();
  CHECK(partial.alpha == 3.0);
  CHECK(partial.k == 256);
  CHECK(partial.learning_rate == 0.001);
  CHECK(partial.t_e == 10);
  CHECK(partial.t_m == 10);
  CHECK(partial.temp_floor == 0.5);
  CHECK(partial.gamma == 0.001);
}

TEST_CASE("zero-weight model on an edgeless 2-node graph") {
  AttributedGraph g;
  g.n = 2;
  g.features = Tensor::zeros({2, 1});
  TrainConfig cfg = small_config();
  cfg.k = 2;
  cfg.pos_weight_mode = "one";
  Trainer trainer(g, {}, cfg);
  for (Parameter& p : trainer.params().items()) p.tensor.fill(0.0);

  RngStream rng = rng_stream(1, "noise");
  ElboTerms terms = trainer.elbo_at(rng.uniform_tensor({2, 2}), rng.normal_tensor({2, 2}), 0.7);
  CHECK(terms.edge_ll == doctest::Approx(2.0 * std::log(0.5)).epsilon(1e-12));
  CHECK(terms.attr_ll == doctest::Approx(2.0 * std::log(0.5)).epsilon(1e-12));
  CHECK(terms.kl_bernoulli == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(terms.kl_gaussian == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("alpha=0 recovers the attribute-free objective") {
  PlantedInstance inst = small_instance();
  TrainConfig cfg = small_config();
  cfg.alpha = 0.0;
  Trainer trainer(inst.graph, inst.graph.edges, cfg);
  RngStream rng = rng_stream(2, "noise");
  ElboTerms terms =
      trainer.elbo_at(rng.uniform_tensor({60, 6}), rng.normal_tensor({60, 6}), 0.8);
  CHECK(terms.attr_ll == 0.0);
  CHECK(terms.elbo ==
        doctest::Approx(terms.edge_ll - terms.kl_bernoulli - terms.kl_gaussian).epsilon(1e-12));
}

TEST_CASE("elbo is bounded by the reconstruction terms") {
  PlantedInstance inst = small_instance();
  TrainConfig cfg = small_config();
  Trainer trainer(inst.graph, inst.graph.edges, cfg);
  RngStream rng = rng_stream(5, "noise");
  ElboTerms terms =
      trainer.elbo_at(rng.uniform_tensor({60, 6}), rng.normal_tensor({60, 6}), 0.9);
  CHECK(terms.kl_bernoulli >= 0.0);
  CHECK(terms.kl_gaussian >= 0.0);
  CHECK(terms.elbo <= terms.edge_ll + cfg.alpha * terms.attr_ll + 1e-12);
}

TEST_CASE("full-ELBO gradient check at small scale") {
  PlantedInstance inst = small_instance(9);
  TrainConfig cfg;
  cfg.k = 3;
  cfg.d_prime = 4;
  cfg.d_dprime = 2;
  cfg.seed = 21;
  AttributedGraph tiny;
  tiny.n = 8;
  tiny.features = Tensor::zeros({8, 5});
  RngStream frng = rng_stream(31, "feat");
  for (std::size_t i = 0; i < tiny.features.numel(); ++i) {
    tiny.features(i) = frng.uniform() < 0.4 ? 1.0 : 0.0;
  }
  tiny.edges = {{0, 1}, {1, 2}, {2, 3}, {4, 5}, {5, 6}};
  Trainer trainer(tiny, tiny.edges, cfg);
  RngStream rng = rng_stream(8, "noise");
  const Tensor unoise = rng.uniform_tensor({8, 3});
  const Tensor nnoise = rng.normal_tensor({8, 3});
  auto build = [&](BoundParams& bp) { return trainer.elbo_var(bp, unoise, nnoise, 0.7); };
  GradCheckResult res = grad_check(trainer.params(), build, 1e-5);
  CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("phase isolation is exact") {
  PlantedInstance inst = small_instance(13);
  TrainConfig cfg = small_config();
  Trainer trainer(inst.graph, inst.graph.edges, cfg);

  const Tensor b_before = trainer.params().get("B").tensor;
  trainer.e_step();
  const Tensor& b_after = trainer.params().get("B").tensor;
  for (std::size_t i = 0; i < b_before.numel(); ++i) CHECK(b_before(i) == b_after(i));

  std::vector<Tensor> theta_before;
  for (const char* name : kEncParamNames) theta_before.push_back(trainer.params().get(name).tensor);
  for (const char* name : kAtnParamNames) theta_before.push_back(trainer.params().get(name).tensor);
  trainer.m_step();
  std::size_t idx = 0;
  for (const char* name : kEncParamNames) {
    const Tensor& now = trainer.params().get(name).tensor;
    for (std::size_t i = 0; i < now.numel(); ++i) CHECK(now(i) == theta_before[idx](i));
    ++idx;
  }
  for (const char* name : kAtnParamNames) {
    const Tensor& now = trainer.params().get(name).tensor;
    for (std::size_t i = 0; i < now.numel(); ++i) CHECK(now(i) == theta_before[idx](i));
    ++idx;
  }
  // And B does move during the M-step.
  const Tensor& b_final = trainer.params().get("B").tensor;
  bool b_moved = false;
  for (std::size_t i = 0; i < b_final.numel(); ++i) {
    if (b_final(i) != b_before(i)) b_moved = true;
  }
  CHECK(b_moved);
}

TEST_CASE("smoothed ELBO is non-decreasing early in training") {
  PlantedInstance inst = small_instance(19);
  TrainConfig cfg = small_config();
  cfg.outer_rounds = 5;  // 50 E iterations
  Trainer trainer(inst.graph, inst.graph.edges, cfg);
  std::vector<TraceRecord> trace;
  for (std::size_t r = 0; r < cfg.outer_rounds; ++r) {
    trainer.e_step(&trace);
    trainer.m_step(&trace);
  }
  std::vector<double> elbos;
  for (const TraceRecord& rec : trace) {
    if (rec.phase == 'E') elbos.push_back(rec.terms.elbo);
  }
  REQUIRE(elbos.size() == 50);
  auto window_mean = [&](std::size_t end) {
    double s = 0.0;
    for (std::size_t i = end - 10; i < end; ++i) s += elbos[i];
    return s / 10.0;
  };
  CHECK(window_mean(50) > window_mean(10));
}

TEST_CASE("large gamma drives B toward zero") {
  PlantedInstance inst = small_instance(23);
  TrainConfig cfg = small_config();
  cfg.gamma = 1000.0;
  cfg.t_m = 200;
  cfg.learning_rate = 0.01;  // Adam steps are bounded by ~lr; give it room to reach 0
  Trainer trainer(inst.graph, inst.graph.edges, cfg);
  const double initial_max = trainer.params().get("B").tensor.max_abs();
  trainer.e_step();
  trainer.m_step();
  CHECK(trainer.params().get("B").tensor.max_abs() < 0.1 * initial_max);
}

TEST_CASE("fit is deterministic and traces are well-formed") {
  PlantedInstance inst = small_instance(29);
  TrainConfig cfg = small_config();
  cfg.outer_rounds = 2;
  Trainer a(inst.graph, inst.graph.edges, cfg);
  FitResult ra = a.fit();
  Trainer b(inst.graph, inst.graph.edges, cfg);
  FitResult rb = b.fit();
  CHECK(std::abs(ra.final_elbo - rb.final_elbo) < 1e-9);
  for (std::size_t i = 0; i < ra.params.items().size(); ++i) {
    const Tensor& ta = ra.params.items()[i].tensor;
    const Tensor& tb = rb.params.items()[i].tensor;
    for (std::size_t j = 0; j < ta.numel(); ++j) CHECK(ta(j) == tb(j));
  }
  for (std::size_t i = 1; i < ra.trace.size(); ++i) {
    CHECK(ra.trace[i].iter > ra.trace[i - 1].iter);
  }
  for (const TraceRecord& rec : ra.trace) {
    CHECK((rec.phase == 'E' || rec.phase == 'M'));
  }
  CHECK(ra.z.rows() == inst.graph.n);
  CHECK(ra.z.cols() == cfg.k);
}

TEST_CASE("identity decoder mode keeps B fixed at identity") {
  PlantedInstance inst = small_instance(37);
  TrainConfig cfg = small_config();
  cfg.decoder_mode = DecoderMode::identity_b;
  cfg.outer_rounds = 2;
  Trainer trainer(inst.graph, inst.graph.edges, cfg);
  FitResult r = trainer.fit();
  const Tensor& b = r.params.get("B").tensor;
  for (std::size_t i = 0; i < cfg.k; ++i) {
    for (std::size_t j = 0; j < cfg.k; ++j) CHECK(b(i, j) == (i == j ? 1.0 : 0.0));
  }
}

TEST_CASE("checkpoint round trip is bit-exact") {
  namespace fs = std::filesystem;
  PlantedInstance inst = small_instance(43);
  TrainConfig cfg = small_config();
  cfg.outer_rounds = 1;
  Trainer trainer(inst.graph, inst.graph.edges, cfg);
  FitResult r = trainer.fit();

  const fs::path dir = fs::temp_directory_path() / "norad_ckpt_test";
  fs::create_directories(dir);
  const std::string manifest = (dir / "model.json").string();
  Checkpoint cp;
  cp.config = trainer.checkpoint_config();
  cp.params = r.params;
  save_checkpoint(manifest, cp);
  Checkpoint back = load_checkpoint(manifest);
  CHECK(back.config == cp.config);
  REQUIRE(back.params.items().size() == cp.params.items().size());
  for (std::size_t i = 0; i < cp.params.items().size(); ++i) {
    const Parameter& pa = cp.params.items()[i];
    const Parameter& pb = back.params.items()[i];
    CHECK(pa.name == pb.name);
    CHECK(pa.tensor.shape() == pb.tensor.shape());
    for (std::size_t j = 0; j < pa.tensor.numel(); ++j) CHECK(pa.tensor(j) == pb.tensor(j));
  }

  // Version mismatch is rejected.
  nlohmann::json mj;
  {
    std::ifstream in(manifest);
    in >> mj;
  }
  mj["version"] = 999;
  {
    std::ofstream out(manifest);
    out << mj.dump();
  }
  CHECK_THROWS_AS(load_checkpoint(manifest), VersionError);
  fs::remove_all(dir);
}

TEST_CASE("trace writer emits one JSON object per line") {
  TraceRecord rec;
  rec.iter = 7;
  rec.phase = 'E';
  rec.terms.elbo = -12.5;
  rec.temperature = 0.8;
  std::ostringstream out;
  write_trace_line(out, rec);
  nlohmann::json j = nlohmann::json::parse(out.str());
  CHECK(j["iter"] == 7);
  CHECK(j["phase"] == "E");
  CHECK(j["elbo"] == -12.5);
}
