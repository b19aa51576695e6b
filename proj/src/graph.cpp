#include "norad/graph.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "norad/errors.hpp"
#include "norad/rng.hpp"

namespace norad {

namespace {

using json = nlohmann::json;

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  std::istringstream is(line);
  while (is >> cur) fields.push_back(cur);
  return fields;
}

bool is_comment_or_blank(const std::string& line) {
  for (char c : line) {
    if (c == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

std::uint64_t pair_key(std::uint32_t i, std::uint32_t j) {
  return (static_cast<std::uint64_t>(i) << 32) | j;
}

std::uint32_t parse_node_id(const std::string& s, std::size_t line_no) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size() || v < 0) throw std::invalid_argument(s);
    return static_cast<std::uint32_t>(v);
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line_no) + ": invalid node id '" + s + "'");
  }
}

}  // namespace

EdgeList canonical_edges(EdgeList edges, EdgeLoadStats* stats) {
  EdgeLoadStats local;
  EdgeList out;
  out.reserve(edges.size());
  for (auto [a, b] : edges) {
    if (a == b) {
      local.self_loops_dropped++;
      continue;
    }
    out.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(out.begin(), out.end());
  const auto last = std::unique(out.begin(), out.end());
  local.duplicates_dropped = static_cast<std::size_t>(out.end() - last);
  out.erase(last, out.end());
  if (stats) {
    stats->duplicates_dropped += local.duplicates_dropped;
    stats->self_loops_dropped += local.self_loops_dropped;
  }
  return out;
}

EdgeList load_edge_list(const std::string& path, EdgeLoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edges file: " + path);
  EdgeList edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_comment_or_blank(line)) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 2) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 'src<TAB>dst'");
    }
    edges.emplace_back(parse_node_id(fields[0], line_no), parse_node_id(fields[1], line_no));
  }
  return canonical_edges(std::move(edges), stats);
}

EdgeList load_edge_list(const std::string& path,
                        const std::map<std::string, std::uint32_t>& name_to_id,
                        EdgeLoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edges file: " + path);
  EdgeList edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_comment_or_blank(line)) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 2) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 'src<TAB>dst'");
    }
    const auto a = name_to_id.find(fields[0]);
    const auto b = name_to_id.find(fields[1]);
    if (a == name_to_id.end() || b == name_to_id.end()) {
      throw ConsistencyError("line " + std::to_string(line_no) +
                             ": edge endpoint missing from feature table");
    }
    edges.emplace_back(a->second, b->second);
  }
  return canonical_edges(std::move(edges), stats);
}

namespace {

FeatureTable load_feature_rows(const std::string& path, bool with_label) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open features file: " + path);
  FeatureTable table;
  std::vector<std::vector<double>> rows;
  std::map<std::string, int> label_ids;
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_comment_or_blank(line)) continue;
    auto fields = split_fields(line);
    const std::size_t min_fields = with_label ? 3 : 2;
    if (fields.size() < min_fields) {
      throw ParseError("line " + std::to_string(line_no) + ": too few columns");
    }
    const std::string name = fields.front();
    std::string label;
    if (with_label) {
      label = fields.back();
      fields.pop_back();
    }
    const std::size_t d = fields.size() - 1;
    if (dim == 0) {
      dim = d;
    } else if (d != dim) {
      throw ParseError("line " + std::to_string(line_no) + ": ragged row, expected " +
                       std::to_string(dim) + " feature columns, got " + std::to_string(d));
    }
    if (table.name_to_id.count(name)) {
      throw ConsistencyError("line " + std::to_string(line_no) + ": duplicate node id '" +
                             name + "'");
    }
    std::vector<double> row(d);
    for (std::size_t i = 0; i < d; ++i) {
      const std::string& f = fields[i + 1];
      if (f == "0") {
        row[i] = 0.0;
      } else if (f == "1") {
        row[i] = 1.0;
      } else {
        throw DomainError("line " + std::to_string(line_no) + ": non-binary feature value '" +
                          f + "'");
      }
    }
    const auto id = static_cast<std::uint32_t>(rows.size());
    table.name_to_id[name] = id;
    table.node_names.push_back(name);
    rows.push_back(std::move(row));
    if (with_label) {
      auto [it, inserted] = label_ids.try_emplace(label, static_cast<int>(label_ids.size()));
      if (inserted) table.label_names.push_back(label);
      table.labels.push_back(it->second);
    }
  }
  if (rows.empty()) throw ParseError("features file is empty: " + path);
  Tensor features({rows.size(), dim});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < dim; ++j) features(i, j) = rows[i][j];
  }
  table.features = std::move(features);
  return table;
}

}  // namespace

FeatureTable load_features(const std::string& path) { return load_feature_rows(path, false); }

FeatureTable load_cora_content(const std::string& path) {
  return load_feature_rows(path, true);
}

AttributedGraph make_graph(FeatureTable table, EdgeList edges) {
  AttributedGraph g;
  g.n = table.features.rows();
  for (auto [a, b] : edges) {
    if (a >= g.n || b >= g.n) {
      throw ConsistencyError("edge endpoint " + std::to_string(std::max(a, b)) +
                             " out of range for n=" + std::to_string(g.n));
    }
  }
  g.edges = std::move(edges);
  g.features = std::move(table.features);
  g.labels = std::move(table.labels);
  g.label_names = std::move(table.label_names);
  g.node_names = std::move(table.node_names);
  return g;
}

void write_edge_list(const std::string& path, const EdgeList& edges) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write edges file: " + path);
  for (auto [a, b] : edges) out << a << '\t' << b << '\n';
}

void write_features(const std::string& path, const AttributedGraph& g) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write features file: " + path);
  const std::size_t d = g.feature_dim();
  for (std::size_t i = 0; i < g.n; ++i) {
    out << (g.node_names.empty() ? std::to_string(i) : g.node_names[i]);
    for (std::size_t j = 0; j < d; ++j) out << '\t' << static_cast<int>(g.features(i, j));
    out << '\n';
  }
}

void write_labels(const std::string& path, const AttributedGraph& g) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write labels file: " + path);
  for (std::size_t i = 0; i < g.labels.size(); ++i) {
    out << i << '\t' << g.labels[i] << '\n';
  }
}

EdgeSplit split_edges(const AttributedGraph& g, double train_ratio,
                      double val_fraction_of_removed, std::uint64_t seed) {
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) {
    throw ContractError("split_edges: train_ratio must be in (0,1)");
  }
  if (val_fraction_of_removed < 0.0 || val_fraction_of_removed > 1.0) {
    throw ContractError("split_edges: val fraction must be in [0,1]");
  }
  const std::size_t m = g.edges.size();
  EdgeList shuffled = g.edges;
  RngStream rng = rng_stream(seed, "split");
  for (std::size_t i = m; i > 1; --i) {
    std::swap(shuffled[i - 1], shuffled[rng.uniform_int(i)]);
  }
  const auto n_train =
      static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(m)));
  const std::size_t removed = m - n_train;
  const auto n_val = static_cast<std::size_t>(
      std::llround(val_fraction_of_removed * static_cast<double>(removed)));

  EdgeSplit split;
  split.train_ratio = train_ratio;
  split.val_fraction = val_fraction_of_removed;
  split.seed = seed;
  split.n = g.n;
  split.train_edges.assign(shuffled.begin(), shuffled.begin() + n_train);
  split.val_pos.assign(shuffled.begin() + n_train, shuffled.begin() + n_train + n_val);
  split.test_pos.assign(shuffled.begin() + n_train + n_val, shuffled.end());
  std::sort(split.train_edges.begin(), split.train_edges.end());
  std::sort(split.val_pos.begin(), split.val_pos.end());
  std::sort(split.test_pos.begin(), split.test_pos.end());

  // Negatives: rejection sampling against every true edge and earlier draws.
  const std::size_t needed = split.val_pos.size() + split.test_pos.size();
  const std::size_t all_pairs = g.n * (g.n - 1) / 2;
  if (all_pairs < m + needed) {
    throw CapacityError("graph too dense to sample " + std::to_string(needed) +
                        " negative edges");
  }
  std::unordered_set<std::uint64_t> forbidden;
  forbidden.reserve(m + needed);
  for (auto [a, b] : g.edges) forbidden.insert(pair_key(a, b));
  EdgeList negatives;
  negatives.reserve(needed);
  std::size_t attempts = 0;
  const std::size_t max_attempts = 1000 * (needed + 16);
  while (negatives.size() < needed) {
    if (++attempts > max_attempts) {
      throw CapacityError("negative sampling exceeded attempt budget");
    }
    auto a = static_cast<std::uint32_t>(rng.uniform_int(g.n));
    auto b = static_cast<std::uint32_t>(rng.uniform_int(g.n));
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (!forbidden.insert(pair_key(a, b)).second) continue;
    negatives.emplace_back(a, b);
  }
  split.val_neg.assign(negatives.begin(), negatives.begin() + split.val_pos.size());
  split.test_neg.assign(negatives.begin() + split.val_pos.size(), negatives.end());
  // Canonical order within each list so file round trips are exact.
  std::sort(split.val_neg.begin(), split.val_neg.end());
  std::sort(split.test_neg.begin(), split.test_neg.end());
  return split;
}

CsrMatrix normalized_adjacency(const EdgeList& edges, std::size_t n) {
  std::vector<double> degree(n, 1.0);  // self loop included
  for (auto [a, b] : edges) {
    if (a >= n || b >= n) throw IndexError("edge endpoint out of range");
    degree[a] += 1.0;
    degree[b] += 1.0;
  }
  std::vector<std::tuple<std::size_t, std::size_t, double>> triplets;
  triplets.reserve(2 * edges.size() + n);
  for (std::size_t i = 0; i < n; ++i) triplets.emplace_back(i, i, 1.0 / degree[i]);
  for (auto [a, b] : edges) {
    const double v = 1.0 / std::sqrt(degree[a] * degree[b]);
    triplets.emplace_back(a, b, v);
    triplets.emplace_back(b, a, v);
  }
  return CsrMatrix::from_triplets(n, n, std::move(triplets));
}

std::vector<std::uint32_t> isolated_nodes(const EdgeList& edges, std::size_t n) {
  std::vector<bool> touched(n, false);
  for (auto [a, b] : edges) {
    touched[a] = true;
    touched[b] = true;
  }
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!touched[i]) out.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

std::vector<std::vector<std::uint32_t>> adjacency_lists(const EdgeList& edges, std::size_t n) {
  std::vector<std::vector<std::uint32_t>> nbrs(n);
  for (auto [a, b] : edges) {
    nbrs[a].push_back(b);
    nbrs[b].push_back(a);
  }
  for (auto& v : nbrs) std::sort(v.begin(), v.end());
  return nbrs;
}

void save_split(const EdgeSplit& split, const std::string& dir,
                const std::string& features_path, const std::string& features_format) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto file = [&](const char* name) { return (fs::path(dir) / name).string(); };
  write_edge_list(file("train_edges.tsv"), split.train_edges);
  write_edge_list(file("val_pos.tsv"), split.val_pos);
  write_edge_list(file("val_neg.tsv"), split.val_neg);
  write_edge_list(file("test_pos.tsv"), split.test_pos);
  write_edge_list(file("test_neg.tsv"), split.test_neg);
  json manifest = {
      {"version", 1},
      {"seed", split.seed},
      {"train_ratio", split.train_ratio},
      {"val_fraction", split.val_fraction},
      {"n", split.n},
      {"features", features_path},
      {"features_format", features_format},
      {"files",
       {{"train_edges", "train_edges.tsv"},
        {"val_pos", "val_pos.tsv"},
        {"val_neg", "val_neg.tsv"},
        {"test_pos", "test_pos.tsv"},
        {"test_neg", "test_neg.tsv"}}},
  };
  std::ofstream out(file("split.json"));
  if (!out) throw IoError("cannot write split manifest in " + dir);
  out << manifest.dump(2) << '\n';
}

LoadedSplit load_split(const std::string& manifest_path) {
  namespace fs = std::filesystem;
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open split manifest: " + manifest_path);
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw ParseError(std::string("split manifest: ") + e.what());
  }
  if (manifest.value("version", 0) != 1) {
    throw VersionError("unsupported split manifest version");
  }
  const fs::path dir = fs::path(manifest_path).parent_path();
  const auto file = [&](const std::string& key) {
    return (dir / manifest.at("files").at(key).get<std::string>()).string();
  };
  LoadedSplit loaded;
  loaded.split.seed = manifest.at("seed").get<std::uint64_t>();
  loaded.split.train_ratio = manifest.at("train_ratio").get<double>();
  loaded.split.val_fraction = manifest.at("val_fraction").get<double>();
  loaded.split.n = manifest.at("n").get<std::size_t>();
  loaded.split.train_edges = load_edge_list(file("train_edges"));
  loaded.split.val_pos = load_edge_list(file("val_pos"));
  loaded.split.val_neg = load_edge_list(file("val_neg"));
  loaded.split.test_pos = load_edge_list(file("test_pos"));
  loaded.split.test_neg = load_edge_list(file("test_neg"));
  loaded.features_path = manifest.value("features", "");
  loaded.features_format = manifest.value("features_format", "features");
  return loaded;
}

}  // namespace norad
