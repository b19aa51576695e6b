#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "norad/atn.hpp"
#include "norad/autodiff.hpp"
#include "norad/encoder.hpp"
#include "norad/graph.hpp"
#include "norad/latent.hpp"

namespace norad {

enum class DecoderMode { osbm, identity_b, no_attr };

std::string to_string(DecoderMode mode);
DecoderMode decoder_mode_from_string(const std::string& s);

/// Alternating variational EM configuration. Flat-key JSON round trip via
/// to_json / from_json.
struct TrainConfig {
  double alpha = 1.0;            // attribute-term weight
  double gamma = 0.001;          // blockmodel L1 coefficient
  std::size_t t_e = 10;          // inner E iterations
  std::size_t t_m = 10;          // inner M iterations
  std::size_t outer_rounds = 200;
  double learning_rate = 0.001;
  std::size_t k = 256;
  std::size_t d_prime = 128;
  std::size_t d_dprime = 64;
  double temp_start = 1.0;
  double temp_floor = 0.5;
  std::uint64_t seed = 1;
  std::string pos_weight_mode = "auto";  // "auto" | "one"
  bool exclude_diagonal = true;
  bool l2_normalize = false;
  DecoderMode decoder_mode = DecoderMode::osbm;
  bool soft_m_step = false;  // Z = eta (.) mu instead of thresholding
  double early_stop_tol = 1e-4;
  std::size_t early_stop_window = 5;
  SpikeSlabPrior prior;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& cfg);
void from_json(const nlohmann::json& j, TrainConfig& cfg);

/// One Adam slot (first/second moments + step counter) per parameter.
struct AdamSlot {
  Tensor m, v;
  std::size_t step = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

/// Bias-corrected Adam step in ascent orientation (gradient added).
void adam_update(Tensor& param, const Tensor& grad, AdamSlot& slot, double lr);

class AdamOptimizer {
 public:
  explicit AdamOptimizer(double lr) : lr_(lr) {}
  /// Applies one ascent step to every named trainable parameter whose bound
  /// var accumulated a gradient.
  void step(ParameterStore& store, const std::vector<std::string>& names,
            const BoundParams& bound);

 private:
  double lr_;
  std::map<std::string, AdamSlot> slots_;
};

struct ElboTerms {
  double edge_ll = 0.0;
  double attr_ll = 0.0;     // unweighted
  double kl_bernoulli = 0.0;
  double kl_gaussian = 0.0;
  double elbo = 0.0;        // edge + alpha*attr - kl_b - kl_g
};

struct TraceRecord {
  std::size_t iter = 0;  // global inner-iteration index
  std::size_t round = 0;
  char phase = 'E';
  ElboTerms terms;
  double penalty = 0.0;  // M-phase only
  double temperature = 0.0;
  double wall_seconds = 0.0;
};

void write_trace_line(std::ostream& out, const TraceRecord& rec);

struct FitOptions {
  const EdgeSplit* split = nullptr;        // enables validation-AUC tracking
  std::string checkpoint_path;             // per-round checkpoint manifest
  std::string best_checkpoint_path;        // best-by-validation-AUC
  std::ostream* trace_out = nullptr;       // JSON-lines sink
  std::function<bool()> interrupted;       // polled between inner iterations
};

struct FitResult {
  ParameterStore params;   // enc.*, atn.*, B
  VariationalParams vparams;
  Tensor z;                // deterministic representation
  std::vector<TraceRecord> trace;
  double final_elbo = 0.0;
  std::size_t rounds_run = 0;
  double best_val_auc = -1.0;
  bool interrupted = false;
};

/// Alternating E/M trainer over a fixed training graph. Exposes the phases
/// separately so their isolation contracts are directly testable.
class Trainer {
 public:
  Trainer(const AttributedGraph& graph, const EdgeList& train_edges, TrainConfig cfg);

  /// Single-sample ELBO at the current parameters with frozen noise; pure.
  ElboTerms elbo_at(const Tensor& uniform_noise, const Tensor& normal_noise,
                    double temperature) const;

  /// Tape version used by both training and gradient checking.
  Var elbo_var(const BoundParams& bound, const Tensor& uniform_noise,
               const Tensor& normal_noise, double temperature, ElboTerms* terms = nullptr) const;

  /// t_e Adam ascent iterations on (theta, phi); B untouched.
  void e_step(std::vector<TraceRecord>* trace = nullptr);
  /// t_m Adam ascent iterations on B at the deterministic representation;
  /// (theta, phi) untouched. No-op in identity-decoder mode.
  void m_step(std::vector<TraceRecord>* trace = nullptr);

  FitResult fit(const FitOptions& opts = {});

  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }
  const TrainConfig& config() const { return cfg_; }
  VariationalParams encode_current() const;
  Tensor representation() const;  // Z deg (or soft Z when configured)
  double current_temperature() const;
  double pos_weight() const { return pos_weight_; }

  /// Validation AUC of the current representation against a split.
  double validation_auc(const EdgeSplit& split) const;

  nlohmann::json checkpoint_config() const;

 private:
  Tensor draw_uniform_noise();
  Tensor draw_normal_noise();

  const AttributedGraph& graph_;
  EdgeList train_edges_;
  TrainConfig cfg_;
  EncoderConfig enc_cfg_;
  AtnConfig atn_cfg_;
  CsrMatrix a_norm_;
  CsrMatrix x_sparse_;
  std::vector<std::vector<std::uint32_t>> neighbors_;
  double pos_weight_ = 1.0;
  ParameterStore params_;
  AdamOptimizer opt_theta_phi_;
  AdamOptimizer opt_b_;
  std::vector<std::string> theta_phi_names_;
  std::size_t e_iters_done_ = 0;
  std::size_t m_iters_done_ = 0;
  std::size_t global_iter_ = 0;
  std::size_t total_e_iters_ = 0;  // annealing horizon
};

}  // namespace norad
