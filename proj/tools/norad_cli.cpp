#include <csignal>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "norad/atn.hpp"
#include "norad/checkpoint.hpp"
#include "norad/encoder.hpp"
#include "norad/errors.hpp"
#include "norad/graph.hpp"
#include "norad/latent.hpp"
#include "norad/metrics.hpp"
#include "norad/rectify.hpp"
#include "norad/rng.hpp"
#include "norad/synth.hpp"
#include "norad/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace norad;

namespace {

constexpr const char* kToolVersion = "0.1.0";

// Stable exit-code contract: 0 success, 2 input, 3 compatibility, 4 numeric.
constexpr int kExitInput = 2;
constexpr int kExitVersion = 3;
constexpr int kExitNumeric = 4;

volatile std::sig_atomic_t g_interrupted = 0;

void handle_sigint(int) { g_interrupted = 1; }

std::string iso_timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file for hashing: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return hex64(fnv1a64(buf.str()));
}

/// nlohmann serializes object keys in sorted order, so the hash is stable
/// under key reordering of the source file.
std::string config_hash(const json& config) { return hex64(fnv1a64(config.dump())); }

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return j;
}

/// Accumulates the per-run provenance record; one manifest per command.
struct ManifestBuilder {
  json m;
  ManifestBuilder(const std::string& command, std::uint64_t seed) {
    m["command"] = command;
    m["tool_version"] = kToolVersion;
    m["seed"] = seed;
    m["started_at"] = iso_timestamp();
    m["input_hashes"] = json::object();
    m["outputs"] = json::array();
  }
  void input(const std::string& path) { m["input_hashes"][path] = file_hash(path); }
  void output(const std::string& path) { m["outputs"].push_back(path); }
  void config(const json& cfg) {
    m["config"] = cfg;
    m["config_hash"] = config_hash(cfg);
  }
  void write(const fs::path& out_dir) {
    m["finished_at"] = iso_timestamp();
    write_json((out_dir / "manifest.json").string(), m);
  }
};

FeatureTable load_feature_table(const std::string& path, const std::string& format) {
  if (format == "features") return load_features(path);
  if (format == "content") return load_cora_content(path);
  throw ParseError("unknown feature format: " + format);
}

struct SplitInputs {
  LoadedSplit loaded;
  AttributedGraph graph;  // all known edges (train + val_pos + test_pos)
};

SplitInputs load_split_inputs(const std::string& manifest_path) {
  SplitInputs si;
  si.loaded = load_split(manifest_path);
  FeatureTable table = load_feature_table(si.loaded.features_path, si.loaded.features_format);
  EdgeList all = si.loaded.split.train_edges;
  all.insert(all.end(), si.loaded.split.val_pos.begin(), si.loaded.split.val_pos.end());
  all.insert(all.end(), si.loaded.split.test_pos.begin(), si.loaded.split.test_pos.end());
  si.graph = make_graph(std::move(table), canonical_edges(std::move(all)));
  return si;
}

Tensor tensor_from_checkpoint(const Checkpoint& cp, const std::string& name) {
  if (!cp.params.has(name)) throw ConsistencyError("checkpoint missing tensor: " + name);
  return cp.params.get(name).tensor;
}

json tensor_to_json(const Tensor& t) {
  json rows = json::array();
  for (std::size_t i = 0; i < t.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < t.cols(); ++j) row.push_back(t(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json eval_report(const Tensor& z, const Tensor& b, const EdgeSplit& split,
                 const std::vector<int>& labels) {
  std::vector<double> pos = score_edges(z, b, split.test_pos);
  std::vector<double> neg = score_edges(z, b, split.test_neg);
  std::vector<double> scores = pos;
  scores.insert(scores.end(), neg.begin(), neg.end());
  std::vector<int> y(pos.size(), 1);
  y.resize(scores.size(), 0);

  json report;
  report["auc"] = roc_auc(scores, y);
  report["ap"] = average_precision(scores, y);
  json hits = json::object();
  for (std::size_t k : {std::size_t{10}, std::size_t{50}, std::size_t{100}}) {
    if (neg.size() >= k && !pos.empty()) {
      hits[std::to_string(k)] = hits_at_k(pos, neg, k);
    }
  }
  report["hits"] = hits;
  if (!labels.empty()) {
    std::set<int> classes(labels.begin(), labels.end());
    ClusterAssignment ca = kmeans(z, classes.size(), split.seed);
    report["nmi"] = nmi(ca.assign, labels);
    report["acc"] = hungarian_accuracy(ca.assign, labels);
  } else {
    report["nmi"] = nullptr;
    report["acc"] = nullptr;
  }
  return report;
}

// -- subcommands ------------------------------------------------------------

int cmd_split(const std::string& edges_path, const std::string& features_path,
              const std::string& format, double train_ratio, double val_fraction,
              std::uint64_t seed, const std::string& out) {
  fs::create_directories(out);
  ManifestBuilder manifest("split", seed);
  manifest.input(edges_path);
  manifest.input(features_path);
  manifest.config({{"train_ratio", train_ratio},
                   {"val_fraction", val_fraction},
                   {"features_format", format},
                   {"seed", seed}});

  FeatureTable table = load_feature_table(features_path, format);
  EdgeList edges = load_edge_list(edges_path, table.name_to_id);
  AttributedGraph g = make_graph(std::move(table), std::move(edges));
  EdgeSplit split = split_edges(g, train_ratio, val_fraction, seed);
  save_split(split, out, features_path, format);
  manifest.output((fs::path(out) / "split.json").string());
  manifest.write(out);
  std::cout << "split: " << split.train_edges.size() << " train / " << split.val_pos.size()
            << " val / " << split.test_pos.size() << " test edges over " << g.n << " nodes\n";
  return 0;
}

int cmd_train(const std::string& split_path, TrainConfig cfg, const std::string& out) {
  fs::create_directories(out);
  SplitInputs si = load_split_inputs(split_path);
  ManifestBuilder manifest("train", cfg.seed);
  manifest.input(split_path);
  manifest.input(si.loaded.features_path);
  manifest.config(json(cfg));

  Trainer trainer(si.graph, si.loaded.split.train_edges, cfg);
  std::ofstream trace((fs::path(out) / "trace.jsonl").string());
  FitOptions opts;
  opts.split = &si.loaded.split;
  opts.checkpoint_path = (fs::path(out) / "checkpoint.json").string();
  opts.best_checkpoint_path = (fs::path(out) / "best_checkpoint.json").string();
  opts.trace_out = &trace;
  opts.interrupted = [] { return g_interrupted != 0; };
  FitResult result = trainer.fit(opts);

  json report;
  report["final_elbo"] = result.final_elbo;
  report["rounds_run"] = result.rounds_run;
  report["best_val_auc"] = result.best_val_auc;
  report["interrupted"] = result.interrupted;
  report["pos_weight"] = trainer.pos_weight();
  report["config_hash"] = config_hash(json(cfg));
  write_json((fs::path(out) / "report.json").string(), report);
  manifest.output(opts.checkpoint_path);
  manifest.output((fs::path(out) / "report.json").string());
  manifest.output((fs::path(out) / "trace.jsonl").string());
  manifest.write(out);
  std::cout << "train: ELBO " << result.final_elbo << " after " << result.rounds_run
            << " rounds; best validation AUC " << result.best_val_auc
            << (result.interrupted ? " (interrupted)" : "") << "\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& split_path,
             const std::string& out) {
  fs::create_directories(out);
  Checkpoint cp = load_checkpoint(checkpoint_path);
  SplitInputs si = load_split_inputs(split_path);
  const std::uint64_t seed = cp.config.value("seed", std::uint64_t{1});
  ManifestBuilder manifest("eval", seed);
  manifest.input(checkpoint_path);
  manifest.input(split_path);
  manifest.config(cp.config);

  Tensor z = tensor_from_checkpoint(cp, "state.z");
  Tensor b = tensor_from_checkpoint(cp, "B");
  if (z.rows() != si.graph.n) {
    throw ConsistencyError("checkpoint was trained on a different graph (n mismatch)");
  }
  json report = eval_report(z, b, si.loaded.split, si.graph.labels);
  report["config_hash"] = config_hash(cp.config);
  report["split_manifest_hash"] = file_hash(split_path);
  write_json((fs::path(out) / "report.json").string(), report);
  manifest.output((fs::path(out) / "report.json").string());
  manifest.write(out);
  std::cout << "eval: AUC " << report["auc"] << " AP " << report["ap"] << "\n";
  return 0;
}

int cmd_rectify(const std::string& checkpoint_path, const std::string& split_path,
                std::size_t iters, double epsilon, const std::string& out) {
  fs::create_directories(out);
  Checkpoint cp = load_checkpoint(checkpoint_path);
  SplitInputs si = load_split_inputs(split_path);
  const std::uint64_t seed = cp.config.value("seed", std::uint64_t{1});
  ManifestBuilder manifest("rectify", seed);
  manifest.input(checkpoint_path);
  manifest.input(split_path);

  RectifyConfig rcfg;
  rcfg.iterations = iters;
  rcfg.epsilon = epsilon;
  rcfg.targets = isolated_nodes(si.loaded.split.train_edges, si.graph.n);
  manifest.config({{"iterations", iters},
                   {"epsilon", epsilon},
                   {"targets", rcfg.targets.size()}});

  Tensor z = tensor_from_checkpoint(cp, "state.z");
  AtnParams atn = atn_params_from_store(cp.params);
  RectifyResult result = rectify(z, si.graph.features, atn, rcfg);

  cp.params.get("state.z").tensor = result.z;
  const std::string out_ckpt = (fs::path(out) / "checkpoint.json").string();
  save_checkpoint(out_ckpt, cp);

  json nodes = json::array();
  std::size_t steps = 0, non_decreasing = 0;
  for (const NodeRectifyTrace& t : result.traces) {
    for (std::size_t s = 1; s < t.ll.size(); ++s) {
      ++steps;
      if (t.ll[s] >= t.ll[s - 1] - 1e-12) ++non_decreasing;
    }
    nodes.push_back({{"node", t.node},
                     {"ll_before", t.ll.front()},
                     {"ll_after", t.ll.back()},
                     {"aborted", t.aborted}});
  }
  json report;
  report["nodes"] = nodes;
  report["num_targets"] = rcfg.targets.size();
  report["non_decreasing_fraction"] =
      steps == 0 ? 1.0 : static_cast<double>(non_decreasing) / static_cast<double>(steps);
  write_json((fs::path(out) / "report.json").string(), report);
  manifest.output(out_ckpt);
  manifest.output((fs::path(out) / "report.json").string());
  manifest.write(out);
  std::cout << "rectify: " << rcfg.targets.size() << " isolated nodes, "
            << report["non_decreasing_fraction"] << " non-decreasing steps\n";
  return 0;
}

int cmd_topics(const std::string& checkpoint_path, int community, bool all,
               std::size_t samples, std::size_t top_m, const std::string& features_path,
               const std::string& format, double df_ceiling, const std::string& out) {
  fs::create_directories(out);
  Checkpoint cp = load_checkpoint(checkpoint_path);
  const std::uint64_t seed = cp.config.value("seed", std::uint64_t{1});
  ManifestBuilder manifest("topics", seed);
  manifest.input(checkpoint_path);
  manifest.config({{"samples", samples}, {"top_m", top_m}, {"df_ceiling", df_ceiling}});

  AtnParams atn = atn_params_from_store(cp.params);
  const std::size_t k = atn.t.rows();

  TopicOptions topts;
  topts.top_m = top_m;
  std::vector<double> doc_freq;
  if (!features_path.empty()) {
    manifest.input(features_path);
    FeatureTable table = load_feature_table(features_path, format);
    const std::size_t n = table.features.rows(), d = table.features.cols();
    doc_freq.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) doc_freq[j] += table.features(i, j);
    }
    for (double& f : doc_freq) f /= static_cast<double>(n);
    topts.doc_freq = &doc_freq;
    topts.df_ceiling = df_ceiling;
  }

  std::vector<std::size_t> communities;
  if (all) {
    for (std::size_t c = 0; c < k; ++c) communities.push_back(c);
  } else {
    if (community < 0) throw ContractError("topics: pass --community or --all");
    communities.push_back(static_cast<std::size_t>(community));
  }

  json report = json::array();
  for (std::size_t c : communities) {
    TopicReport tr = topic_distribution(c, samples, seed, atn, topts);
    json words = json::array();
    for (const TopicEntry& e : tr.top_words) {
      words.push_back({{"attribute", e.attribute}, {"mean_activation", e.mean_activation}});
    }
    report.push_back({{"community", c}, {"top_words", words}});
  }
  write_json((fs::path(out) / "topics.json").string(), report);
  manifest.output((fs::path(out) / "topics.json").string());
  manifest.write(out);
  std::cout << "topics: " << communities.size() << " communities, " << samples
            << " samples each\n";
  return 0;
}

int cmd_synth(const SynthPreset& preset, std::uint64_t seed, const std::string& out) {
  fs::create_directories(out);
  ManifestBuilder manifest("synth", seed);
  manifest.config({{"n", preset.n},
                   {"k", preset.k},
                   {"delta", preset.delta},
                   {"slab_u", preset.slab_u},
                   {"slab_s", preset.slab_s},
                   {"diag", preset.diag},
                   {"offdiag", preset.offdiag},
                   {"d_prime", preset.d_prime},
                   {"d_dprime", preset.d_dprime},
                   {"attr_dim", preset.attr_dim},
                   {"community_blind", preset.community_blind},
                   {"seed", seed}});
  PlantedInstance inst = generate_preset(preset, seed);
  save_instance(inst, out);
  for (const char* f : {"edges.tsv", "features.tsv", "labels.tsv", "planted.json"}) {
    manifest.output((fs::path(out) / f).string());
  }
  manifest.write(out);
  std::cout << "synth: n=" << preset.n << " K=" << preset.k << ", "
            << inst.graph.edges.size() << " edges\n";
  return 0;
}

int cmd_gradcheck(const std::string& scale) {
  if (scale != "tiny") throw ContractError("gradcheck: only --scale tiny is supported");
  // Frozen tiny instance: n=12, D=8, K=4, d'=8, d''=4, tau=0.7.
  const std::size_t n = 12, d = 8;
  TrainConfig cfg;
  cfg.k = 4;
  cfg.d_prime = 8;
  cfg.d_dprime = 4;
  cfg.seed = 7;
  AttributedGraph g;
  g.n = n;
  g.features = Tensor::zeros({n, d});
  RngStream frng = rng_stream(cfg.seed, "gradcheck/features");
  for (std::size_t i = 0; i < g.features.numel(); ++i) {
    g.features(i) = frng.uniform() < 0.35 ? 1.0 : 0.0;
  }
  g.edges = {{0, 1}, {0, 2}, {1, 3}, {2, 5}, {4, 7}, {5, 6}, {6, 8}, {8, 9}, {9, 11}, {3, 10}};
  Trainer trainer(g, g.edges, cfg);
  RngStream nrng = rng_stream(cfg.seed, "gradcheck/noise");
  const Tensor unoise = nrng.uniform_tensor({n, cfg.k});
  const Tensor nnoise = nrng.normal_tensor({n, cfg.k});
  auto build = [&](BoundParams& bp) { return trainer.elbo_var(bp, unoise, nnoise, 0.7); };
  GradCheckResult res = grad_check(trainer.params(), build, 1e-5);
  std::cout << "gradcheck: max relative error " << res.max_rel_err << " (worst "
            << res.worst_param << "[" << res.worst_index << "])\n";
  return res.max_rel_err < 1e-4 ? 0 : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, handle_sigint);
  CLI::App app{"Spike-and-slab variational graph autoencoder with a blockmodel edge decoder "
               "and an attention-based attribute decoder"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  // split
  auto* split = app.add_subcommand("split", "Create a link-prediction edge split");
  std::string sp_edges, sp_features, sp_format = "features", sp_out;
  double sp_ratio = 0.85, sp_val_fraction = 1.0 / 3.0;
  std::uint64_t sp_seed = 1;
  split->add_option("--edges", sp_edges, "Edge list TSV")->required();
  split->add_option("--features", sp_features, "Feature table")->required();
  split->add_option("--format", sp_format, "features|content");
  split->add_option("--train-ratio", sp_ratio, "Fraction of edges kept for training");
  split->add_option("--val-fraction", sp_val_fraction, "Fraction of removed edges used for validation");
  split->add_option("--seed", sp_seed, "Split RNG seed");
  split->add_option("--out", sp_out, "Output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "Fit the model on a split");
  std::string tr_split, tr_config, tr_out, tr_decoder_mode;
  TrainConfig tr_cfg;
  double tr_alpha = 0, tr_gamma = 0, tr_lr = 0, tr_temp_start = 0, tr_temp_floor = 0;
  std::size_t tr_k = 0, tr_dp = 0, tr_dd = 0, tr_rounds = 0, tr_te = 0, tr_tm = 0;
  std::uint64_t tr_seed = 0;
  std::string tr_pos_weight;
  train->add_option("--split", tr_split, "Split manifest JSON")->required();
  train->add_option("--config", tr_config, "Config JSON (flat keys)");
  train->add_option("--out", tr_out, "Output directory")->required();
  auto* o_alpha = train->add_option("--alpha", tr_alpha, "Attribute-term weight");
  auto* o_gamma = train->add_option("--gamma", tr_gamma, "Blockmodel L1 coefficient");
  auto* o_k = train->add_option("--k", tr_k, "Latent dimension K");
  auto* o_dp = train->add_option("--d-prime", tr_dp, "Topic width d'");
  auto* o_dd = train->add_option("--d-dprime", tr_dd, "Attention width d''");
  auto* o_rounds = train->add_option("--outer-rounds", tr_rounds, "Max EM rounds");
  auto* o_te = train->add_option("--t-e", tr_te, "E iterations per round");
  auto* o_tm = train->add_option("--t-m", tr_tm, "M iterations per round");
  auto* o_lr = train->add_option("--learning-rate", tr_lr, "Adam learning rate");
  auto* o_ts = train->add_option("--temp-start", tr_temp_start, "Initial temperature");
  auto* o_tf = train->add_option("--temp-floor", tr_temp_floor, "Final temperature");
  auto* o_seed = train->add_option("--seed", tr_seed, "Training RNG seed");
  auto* o_pw = train->add_option("--pos-weight", tr_pos_weight, "auto|one");
  auto* o_dm = train->add_option("--decoder-mode", tr_decoder_mode, "osbm|identity_b|no_attr");

  // eval
  auto* eval = app.add_subcommand("eval", "Score a checkpoint against a split");
  std::string ev_ckpt, ev_split, ev_out;
  eval->add_option("--checkpoint", ev_ckpt, "Checkpoint manifest")->required();
  eval->add_option("--split", ev_split, "Split manifest JSON")->required();
  eval->add_option("--out", ev_out, "Output directory")->required();

  // rectify
  auto* rect = app.add_subcommand("rectify", "Refine isolated-node representations");
  std::string rc_ckpt, rc_split, rc_out;
  std::size_t rc_iters = 50;
  double rc_epsilon = 0.001;
  rect->add_option("--checkpoint", rc_ckpt, "Checkpoint manifest")->required();
  rect->add_option("--split", rc_split, "Split manifest JSON")->required();
  rect->add_option("--iters", rc_iters, "Gradient-ascent iterations");
  rect->add_option("--epsilon", rc_epsilon, "Step size");
  rect->add_option("--out", rc_out, "Output directory")->required();

  // topics
  auto* topics = app.add_subcommand("topics", "Per-community attribute distributions");
  std::string tp_ckpt, tp_features, tp_format = "features", tp_out;
  int tp_community = -1;
  bool tp_all = false;
  std::size_t tp_samples = 10000, tp_top_m = 8;
  double tp_df_ceiling = 0.2;
  topics->add_option("--checkpoint", tp_ckpt, "Checkpoint manifest")->required();
  topics->add_option("--community", tp_community, "Single community index");
  topics->add_flag("--all", tp_all, "All communities");
  topics->add_option("--samples", tp_samples, "Monte-Carlo samples per community");
  topics->add_option("--top-m", tp_top_m, "Top attributes per community");
  topics->add_option("--features", tp_features, "Feature table for frequency filtering");
  topics->add_option("--format", tp_format, "features|content");
  topics->add_option("--df-ceiling", tp_df_ceiling, "Document-frequency ceiling");
  topics->add_option("--out", tp_out, "Output directory")->required();

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a planted synthetic instance");
  std::string sy_params, sy_out;
  SynthPreset sy_preset;
  std::uint64_t sy_seed = 1;
  synth->add_option("--params", sy_params, "Preset overrides as JSON");
  synth->add_option("--n", sy_preset.n, "Nodes");
  synth->add_option("--k", sy_preset.k, "Planted communities");
  synth->add_option("--delta", sy_preset.delta, "Spike probability");
  synth->add_option("--slab-u", sy_preset.slab_u, "Slab mean");
  synth->add_option("--slab-s", sy_preset.slab_s, "Slab standard deviation");
  synth->add_option("--diag", sy_preset.diag, "Within-community block weight");
  synth->add_option("--offdiag", sy_preset.offdiag, "Cross-community block weight");
  synth->add_option("--attr-dim", sy_preset.attr_dim, "Attribute dimension");
  synth->add_flag("--community-blind", sy_preset.community_blind,
                  "Plant diag == offdiag (negative control)");
  synth->add_option("--seed", sy_seed, "Generator seed");
  synth->add_option("--out", sy_out, "Output directory")->required();

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient audit");
  std::string gc_scale = "tiny";
  gradcheck->add_option("--scale", gc_scale, "Instance scale (tiny)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (split->parsed()) {
      return cmd_split(sp_edges, sp_features, sp_format, sp_ratio, sp_val_fraction, sp_seed,
                       sp_out);
    }
    if (train->parsed()) {
      if (!tr_config.empty()) tr_cfg = read_json(tr_config).get<TrainConfig>();
      if (o_alpha->count()) tr_cfg.alpha = tr_alpha;
      if (o_gamma->count()) tr_cfg.gamma = tr_gamma;
      if (o_k->count()) tr_cfg.k = tr_k;
      if (o_dp->count()) tr_cfg.d_prime = tr_dp;
      if (o_dd->count()) tr_cfg.d_dprime = tr_dd;
      if (o_rounds->count()) tr_cfg.outer_rounds = tr_rounds;
      if (o_te->count()) tr_cfg.t_e = tr_te;
      if (o_tm->count()) tr_cfg.t_m = tr_tm;
      if (o_lr->count()) tr_cfg.learning_rate = tr_lr;
      if (o_ts->count()) tr_cfg.temp_start = tr_temp_start;
      if (o_tf->count()) tr_cfg.temp_floor = tr_temp_floor;
      if (o_seed->count()) tr_cfg.seed = tr_seed;
      if (o_pw->count()) tr_cfg.pos_weight_mode = tr_pos_weight;
      if (o_dm->count()) tr_cfg.decoder_mode = decoder_mode_from_string(tr_decoder_mode);
      tr_cfg.validate();
      return cmd_train(tr_split, tr_cfg, tr_out);
    }
    if (eval->parsed()) return cmd_eval(ev_ckpt, ev_split, ev_out);
    if (rect->parsed()) return cmd_rectify(rc_ckpt, rc_split, rc_iters, rc_epsilon, rc_out);
    if (topics->parsed()) {
      return cmd_topics(tp_ckpt, tp_community, tp_all, tp_samples, tp_top_m, tp_features,
                        tp_format, tp_df_ceiling, tp_out);
    }
    if (synth->parsed()) {
      if (!sy_params.empty()) {
        const json j = read_json(sy_params);
        SynthPreset defaults;
        sy_preset.n = j.value("n", sy_preset.n);
        sy_preset.k = j.value("k", sy_preset.k);
        sy_preset.delta = j.value("delta", sy_preset.delta);
        sy_preset.slab_u = j.value("slab_u", sy_preset.slab_u);
        sy_preset.slab_s = j.value("slab_s", sy_preset.slab_s);
        sy_preset.diag = j.value("diag", sy_preset.diag);
        sy_preset.offdiag = j.value("offdiag", sy_preset.offdiag);
        sy_preset.d_prime = j.value("d_prime", sy_preset.d_prime);
        sy_preset.d_dprime = j.value("d_dprime", sy_preset.d_dprime);
        sy_preset.attr_dim = j.value("attr_dim", sy_preset.attr_dim);
        sy_preset.community_blind = j.value("community_blind", sy_preset.community_blind);
        sy_seed = j.value("seed", sy_seed);
      }
      return cmd_synth(sy_preset, sy_seed, sy_out);
    }
    if (gradcheck->parsed()) return cmd_gradcheck(gc_scale);
  } catch (const VersionError& e) {
    std::cerr << "error (compatibility): " << e.what() << "\n";
    return kExitVersion;
  } catch (const NumericError& e) {
    std::cerr << "error (numeric): " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return 0;
}
