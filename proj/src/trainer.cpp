#include "norad/trainer.hpp"

#include <chrono>
#include <cmath>

#include "norad/checkpoint.hpp"
#include "norad/edge_decoder.hpp"
#include "norad/errors.hpp"
#include "norad/metrics.hpp"
#include "norad/rng.hpp"

namespace norad {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::chrono::steady_clock::time_point g_epoch = std::chrono::steady_clock::now();

void l2_normalize_rows(Tensor& z) {
  for (std::size_t i = 0; i < z.rows(); ++i) {
    double norm = 0.0;
    for (std::size_t j = 0; j < z.cols(); ++j) norm += z(i, j) * z(i, j);
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (std::size_t j = 0; j < z.cols(); ++j) z(i, j) /= norm;
    }
  }
}

}  // namespace

std::string to_string(DecoderMode mode) {
  switch (mode) {
    case DecoderMode::osbm: return "osbm";
    case DecoderMode::identity_b: return "identity_b";
    case DecoderMode::no_attr: return "no_attr";
  }
  throw ContractError("unknown decoder mode");
}

DecoderMode decoder_mode_from_string(const std::string& s) {
  if (s == "osbm") return DecoderMode::osbm;
  if (s == "identity_b") return DecoderMode::identity_b;
  if (s == "no_attr") return DecoderMode::no_attr;
  throw ParseError("unknown decoder mode: " + s);
}

void TrainConfig::validate() const {
  if (alpha < 0.0) throw ContractError("alpha must be >= 0");
  if (gamma < 0.0) throw ContractError("gamma must be >= 0");
  if (t_e < 1 || t_m < 1) throw ContractError("t_e and t_m must be >= 1");
  if (!(learning_rate > 0.0)) throw ContractError("learning_rate must be > 0");
  if (k < 1) throw ContractError("K must be >= 1");
  if (!(temp_floor > 0.0) || temp_start < temp_floor) {
    throw ContractError("need temp_start >= temp_floor > 0");
  }
  if (pos_weight_mode != "auto" && pos_weight_mode != "one") {
    throw ContractError("pos_weight_mode must be 'auto' or 'one'");
  }
  if (early_stop_window < 1) throw ContractError("early_stop_window must be >= 1");
  prior.validate();
}

void to_json(nlohmann::json& j, const TrainConfig& cfg) {
  j = nlohmann::json{{"alpha", cfg.alpha},
                     {"gamma", cfg.gamma},
                     {"t_e", cfg.t_e},
                     {"t_m", cfg.t_m},
                     {"outer_rounds", cfg.outer_rounds},
                     {"learning_rate", cfg.learning_rate},
                     {"k", cfg.k},
                     {"d_prime", cfg.d_prime},
                     {"d_dprime", cfg.d_dprime},
                     {"temp_start", cfg.temp_start},
                     {"temp_floor", cfg.temp_floor},
                     {"seed", cfg.seed},
                     {"pos_weight_mode", cfg.pos_weight_mode},
                     {"exclude_diagonal", cfg.exclude_diagonal},
                     {"l2_normalize", cfg.l2_normalize},
                     {"decoder_mode", to_string(cfg.decoder_mode)},
                     {"soft_m_step", cfg.soft_m_step},
                     {"early_stop_tol", cfg.early_stop_tol},
                     {"early_stop_window", cfg.early_stop_window},
                     {"prior_delta", cfg.prior.delta},
                     {"prior_u", cfg.prior.u},
                     {"prior_s", cfg.prior.s}};
}

void from_json(const nlohmann::json& j, TrainConfig& cfg) {
  TrainConfig defaults;
  cfg.alpha = j.value("alpha", defaults.alpha);
  cfg.gamma = j.value("gamma", defaults.gamma);
  cfg.t_e = j.value("t_e", defaults.t_e);
  cfg.t_m = j.value("t_m", defaults.t_m);
  cfg.outer_rounds = j.value("outer_rounds", defaults.outer_rounds);
  cfg.learning_rate = j.value("learning_rate", defaults.learning_rate);
  cfg.k = j.value("k", defaults.k);
  cfg.d_prime = j.value("d_prime", defaults.d_prime);
  cfg.d_dprime = j.value("d_dprime", defaults.d_dprime);
  cfg.temp_start = j.value("temp_start", defaults.temp_start);
  cfg.temp_floor = j.value("temp_floor", defaults.temp_floor);
  cfg.seed = j.value("seed", defaults.seed);
  cfg.pos_weight_mode = j.value("pos_weight_mode", defaults.pos_weight_mode);
  cfg.exclude_diagonal = j.value("exclude_diagonal", defaults.exclude_diagonal);
  cfg.l2_normalize = j.value("l2_normalize", defaults.l2_normalize);
  cfg.decoder_mode =
      decoder_mode_from_string(j.value("decoder_mode", to_string(defaults.decoder_mode)));
  cfg.soft_m_step = j.value("soft_m_step", defaults.soft_m_step);
  cfg.early_stop_tol = j.value("early_stop_tol", defaults.early_stop_tol);
  cfg.early_stop_window = j.value("early_stop_window", defaults.early_stop_window);
  cfg.prior.delta = j.value("prior_delta", defaults.prior.delta);
  cfg.prior.u = j.value("prior_u", defaults.prior.u);
  cfg.prior.s = j.value("prior_s", defaults.prior.s);
}

void adam_update(Tensor& param, const Tensor& grad, AdamSlot& slot, double lr) {
  if (!param.same_shape(grad)) throw DimensionError("adam_update: shape mismatch");
  if (slot.step == 0) {
    slot.m = Tensor::zeros(param.shape());
    slot.v = Tensor::zeros(param.shape());
  }
  slot.step++;
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(slot.step));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(slot.step));
  for (std::size_t i = 0; i < param.numel(); ++i) {
    const double g = grad(i);
    slot.m(i) = kAdamBeta1 * slot.m(i) + (1.0 - kAdamBeta1) * g;
    slot.v(i) = kAdamBeta2 * slot.v(i) + (1.0 - kAdamBeta2) * g * g;
    const double mhat = slot.m(i) / c1;
    const double vhat = slot.v(i) / c2;
    param(i) += lr * mhat / (std::sqrt(vhat) + kAdamEps);
  }
}

void AdamOptimizer::step(ParameterStore& store, const std::vector<std::string>& names,
                         const BoundParams& bound) {
  for (const std::string& name : names) {
    Parameter& p = store.get(name);
    if (!p.trainable) continue;
    const Var v = bound.at(name);
    if (!v->has_grad()) continue;
    adam_update(p.tensor, v->grad(), slots_[name], lr_);
  }
}

void write_trace_line(std::ostream& out, const TraceRecord& rec) {
  nlohmann::json j = {{"iter", rec.iter},
                      {"round", rec.round},
                      {"phase", std::string(1, rec.phase)},
                      {"elbo", rec.terms.elbo},
                      {"edge_ll", rec.terms.edge_ll},
                      {"attr_ll", rec.terms.attr_ll},
                      {"kl_bernoulli", rec.terms.kl_bernoulli},
                      {"kl_gaussian", rec.terms.kl_gaussian},
                      {"penalty", rec.penalty},
                      {"temperature", rec.temperature},
                      {"wall_seconds", rec.wall_seconds}};
  out << j.dump() << "\n";
}

Trainer::Trainer(const AttributedGraph& graph, const EdgeList& train_edges, TrainConfig cfg)
    : graph_(graph),
      train_edges_(train_edges),
      cfg_(std::move(cfg)),
      opt_theta_phi_(cfg_.learning_rate),
      opt_b_(cfg_.learning_rate) {
  cfg_.validate();
  if (graph_.feature_dim() == 0) throw ContractError("Trainer: graph has no features");
  enc_cfg_ = EncoderConfig{graph_.feature_dim(), cfg_.k, cfg_.l2_normalize};
  atn_cfg_ = AtnConfig{cfg_.k, cfg_.d_prime, cfg_.d_dprime, graph_.feature_dim()};
  a_norm_ = normalized_adjacency(train_edges_, graph_.n);
  x_sparse_ = CsrMatrix::from_dense(graph_.features);
  neighbors_ = adjacency_lists(train_edges_, graph_.n);
  pos_weight_ = cfg_.pos_weight_mode == "auto"
                    ? default_pos_weight(graph_.n, train_edges_.size(), cfg_.exclude_diagonal)
                    : 1.0;

  RngStream enc_rng = rng_stream(cfg_.seed, "init/enc");
  init_encoder_params(params_, enc_cfg_, enc_rng);
  RngStream atn_rng = rng_stream(cfg_.seed, "init/atn");
  init_atn_params(params_, atn_cfg_, atn_rng);
  if (cfg_.decoder_mode == DecoderMode::identity_b) {
    params_.add("B", Tensor::identity(cfg_.k), false);
  } else {
    RngStream b_rng = rng_stream(cfg_.seed, "init/b");
    params_.add("B", b_rng.glorot_tensor(cfg_.k, cfg_.k));
  }
  for (const char* name : kEncParamNames) theta_phi_names_.push_back(name);
  for (const char* name : kAtnParamNames) theta_phi_names_.push_back(name);
  total_e_iters_ = cfg_.outer_rounds * cfg_.t_e;
}

double Trainer::current_temperature() const {
  return temperature_schedule(e_iters_done_, total_e_iters_, cfg_.temp_start, cfg_.temp_floor);
}

Tensor Trainer::draw_uniform_noise() {
  RngStream rng = rng_stream(cfg_.seed, "noise/u/" + std::to_string(e_iters_done_));
  return rng.uniform_tensor({graph_.n, cfg_.k});
}

Tensor Trainer::draw_normal_noise() {
  RngStream rng = rng_stream(cfg_.seed, "noise/eps/" + std::to_string(e_iters_done_));
  return rng.normal_tensor({graph_.n, cfg_.k});
}

Var Trainer::elbo_var(const BoundParams& bound, const Tensor& uniform_noise,
                      const Tensor& normal_noise, double temperature,
                      ElboTerms* terms) const {
  EncoderOutput enc = encode(a_norm_, x_sparse_, bound, enc_cfg_);
  Var c = sample_relaxed_bernoulli(enc.eta, temperature, uniform_noise);
  Var v = sample_gaussian(enc.mu, enc.sigma, normal_noise);
  Var z = hadamard(c, v);
  if (cfg_.l2_normalize) z = row_l2_normalize(z);

  EdgeLikelihoodSpec spec;
  spec.neighbors = &neighbors_;
  spec.pos_weight = pos_weight_;
  spec.exclude_diagonal = cfg_.exclude_diagonal;
  const Var b = cfg_.decoder_mode == DecoderMode::identity_b
                    ? constant(Tensor::identity(cfg_.k))
                    : bound.at("B");
  Var edge = osbm_edge_ll(z, b, spec);

  const bool use_attr = cfg_.decoder_mode != DecoderMode::no_attr && cfg_.alpha > 0.0;
  Var attr;
  if (use_attr) {
    Var logits = attribute_logits(z, bound.at("atn.T"), bound.at("atn.U"), bound.at("atn.Wq"),
                                  bound.at("atn.Wk"));
    attr = bernoulli_logits_ll(logits, graph_.features);
  }
  Var klb = kl_bernoulli(enc.eta, cfg_.prior.delta);
  Var klg = kl_gaussian(enc.mu, enc.sigma, cfg_.prior.u, cfg_.prior.s);

  Var recon = use_attr ? add(edge, scale(attr, cfg_.alpha)) : edge;
  Var elbo = sub(sub(recon, klb), klg);

  ElboTerms t;
  t.edge_ll = edge->value(0);
  t.attr_ll = use_attr ? attr->value(0) : 0.0;
  t.kl_bernoulli = klb->value(0);
  t.kl_gaussian = klg->value(0);
  t.elbo = elbo->value(0);
  if (!std::isfinite(t.elbo)) {
    std::string which = !std::isfinite(t.edge_ll)        ? "edge log-likelihood"
                        : !std::isfinite(t.attr_ll)      ? "attribute log-likelihood"
                        : !std::isfinite(t.kl_bernoulli) ? "Bernoulli KL"
                        : !std::isfinite(t.kl_gaussian)  ? "Gaussian KL"
                                                         : "objective";
    throw NumericError("non-finite " + which + " (edge=" + std::to_string(t.edge_ll) +
                       " attr=" + std::to_string(t.attr_ll) +
                       " kl_b=" + std::to_string(t.kl_bernoulli) +
                       " kl_g=" + std::to_string(t.kl_gaussian) + ")");
  }
  if (terms != nullptr) *terms = t;
  return elbo;
}

ElboTerms Trainer::elbo_at(const Tensor& uniform_noise, const Tensor& normal_noise,
                           double temperature) const {
  BoundParams bound = bind_params(params_);
  ElboTerms terms;
  elbo_var(bound, uniform_noise, normal_noise, temperature, &terms);
  return terms;
}

void Trainer::e_step(std::vector<TraceRecord>* trace) {
  for (std::size_t t = 0; t < cfg_.t_e; ++t) {
    const double temp = current_temperature();
    const Tensor unoise = draw_uniform_noise();
    const Tensor nnoise = draw_normal_noise();
    e_iters_done_++;
    BoundParams bound = bind_params(params_);
    ElboTerms terms;
    Var elbo;
    try {
      elbo = elbo_var(bound, unoise, nnoise, temp, &terms);
    } catch (const NumericError& e) {
      throw NumericError("E-step iteration " + std::to_string(e_iters_done_) + ": " +
                         e.what());
    }
    backward(elbo);
    opt_theta_phi_.step(params_, theta_phi_names_, bound);
    if (trace != nullptr) {
      TraceRecord rec;
      rec.iter = global_iter_++;
      rec.phase = 'E';
      rec.terms = terms;
      rec.temperature = temp;
      rec.wall_seconds = seconds_since(g_epoch);
      trace->push_back(rec);
    }
  }
}

void Trainer::m_step(std::vector<TraceRecord>* trace) {
  if (cfg_.decoder_mode == DecoderMode::identity_b) return;
  const Tensor z = representation();
  EdgeLikelihoodSpec spec;
  spec.neighbors = &neighbors_;
  spec.pos_weight = pos_weight_;
  spec.exclude_diagonal = cfg_.exclude_diagonal;
  const Var zc = constant(z);
  for (std::size_t t = 0; t < cfg_.t_m; ++t) {
    m_iters_done_++;
    BoundParams bound = bind_params(params_);
    Var edge = osbm_edge_ll(zc, bound.at("B"), spec);
    Var pen = b_penalty(bound.at("B"), cfg_.gamma);
    Var obj = sub(edge, pen);
    if (!std::isfinite(obj->value(0))) {
      throw NumericError("M-step iteration " + std::to_string(m_iters_done_) +
                         ": non-finite objective (edge=" + std::to_string(edge->value(0)) +
                         " penalty=" + std::to_string(pen->value(0)) + ")");
    }
    backward(obj);
    opt_b_.step(params_, {"B"}, bound);
    if (trace != nullptr) {
      TraceRecord rec;
      rec.iter = global_iter_++;
      rec.phase = 'M';
      rec.terms.edge_ll = edge->value(0);
      rec.terms.elbo = obj->value(0);
      rec.penalty = pen->value(0);
      rec.temperature = current_temperature();
      rec.wall_seconds = seconds_since(g_epoch);
      trace->push_back(rec);
    }
  }
}

VariationalParams Trainer::encode_current() const {
  return encode_values(a_norm_, x_sparse_, params_, enc_cfg_);
}

Tensor Trainer::representation() const {
  VariationalParams vp = encode_current();
  Tensor z;
  if (cfg_.soft_m_step) {
    z = Tensor::zeros({graph_.n, cfg_.k});
    for (std::size_t i = 0; i < z.numel(); ++i) z(i) = vp.eta(i) * vp.mu(i);
  } else {
    z = deterministic_representation(vp.eta, vp.mu);
  }
  if (cfg_.l2_normalize) l2_normalize_rows(z);
  return z;
}

double Trainer::validation_auc(const EdgeSplit& split) const {
  if (split.val_pos.empty() || split.val_neg.empty()) return -1.0;
  const Tensor z = representation();
  const Tensor& b = params_.get("B").tensor;
  std::vector<double> scores = score_edges(z, b, split.val_pos);
  std::vector<int> labels(split.val_pos.size(), 1);
  std::vector<double> neg = score_edges(z, b, split.val_neg);
  scores.insert(scores.end(), neg.begin(), neg.end());
  labels.insert(labels.end(), split.val_neg.size(), 0);
  return roc_auc(scores, labels);
}

nlohmann::json Trainer::checkpoint_config() const {
  nlohmann::json j = cfg_;
  j["input_dim"] = graph_.feature_dim();
  j["n"] = graph_.n;
  return j;
}

FitResult Trainer::fit(const FitOptions& opts) {
  FitResult result;
  std::vector<double> round_elbos;
  bool stop = false;

  const auto make_checkpoint = [&]() {
    Checkpoint cp;
    cp.config = checkpoint_config();
    cp.params = params_;
    VariationalParams vp = encode_current();
    cp.params.add("state.eta", vp.eta, false);
    cp.params.add("state.mu", vp.mu, false);
    cp.params.add("state.sigma", vp.sigma, false);
    cp.params.add("state.z", representation(), false);
    return cp;
  };
  ParameterStore last_good = params_;

  for (std::size_t round = 0; round < cfg_.outer_rounds && !stop; ++round) {
    last_good = params_;
    const std::size_t trace_start = result.trace.size();
    try {
      e_step(&result.trace);
      m_step(&result.trace);
    } catch (const NumericError&) {
      if (!opts.checkpoint_path.empty()) {
        params_ = last_good;
        save_checkpoint(opts.checkpoint_path, make_checkpoint());
      }
      throw;
    }
    result.rounds_run = round + 1;

    // Per-round ELBO is the mean over the round's E iterations; single-sample
    // values are too noisy to compare directly.
    double round_elbo = 0.0;
    std::size_t e_count = 0;
    for (std::size_t i = trace_start; i < result.trace.size(); ++i) {
      result.trace[i].round = round;
      if (result.trace[i].phase == 'E') {
        round_elbo += result.trace[i].terms.elbo;
        ++e_count;
      }
      if (opts.trace_out != nullptr) write_trace_line(*opts.trace_out, result.trace[i]);
    }
    if (e_count > 0) round_elbo /= static_cast<double>(e_count);
    round_elbos.push_back(round_elbo);

    if (!opts.checkpoint_path.empty()) {
      save_checkpoint(opts.checkpoint_path, make_checkpoint());
    }
    if (opts.split != nullptr) {
      const double auc = validation_auc(*opts.split);
      if (auc > result.best_val_auc) {
        result.best_val_auc = auc;
        if (!opts.best_checkpoint_path.empty()) {
          save_checkpoint(opts.best_checkpoint_path, make_checkpoint());
        }
      }
    }

    const std::size_t w = cfg_.early_stop_window;
    if (round_elbos.size() >= 2 * w) {
      double prev = 0.0, now = 0.0;
      const std::size_t r = round_elbos.size();
      for (std::size_t i = r - w; i < r; ++i) now += round_elbos[i];
      for (std::size_t i = r - 2 * w; i < r - w; ++i) prev += round_elbos[i];
      now /= static_cast<double>(w);
      prev /= static_cast<double>(w);
      const double rel = (now - prev) / std::max(std::abs(prev), 1e-12);
      if (rel < cfg_.early_stop_tol) stop = true;
    }
    if (opts.interrupted && opts.interrupted()) {
      result.interrupted = true;
      if (!opts.checkpoint_path.empty()) {
        save_checkpoint(opts.checkpoint_path, make_checkpoint());
      }
      break;
    }
  }

  result.params = params_;
  result.vparams = encode_current();
  result.z = representation();
  result.final_elbo = round_elbos.empty() ? 0.0 : round_elbos.back();
  return result;
}

}  // namespace norad
