#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "norad/sparse.hpp"
#include "norad/tensor.hpp"

namespace norad {

using Edge = std::pair<std::uint32_t, std::uint32_t>;  // (i, j) with i < j
using EdgeList = std::vector<Edge>;

/// Undirected attributed graph with binary node features.
struct AttributedGraph {
  std::size_t n = 0;
  EdgeList edges;  // sorted, unique, i < j, no self loops
  Tensor features;  // n x D, entries in {0, 1}
  std::vector<int> labels;                 // empty when absent
  std::vector<std::string> label_names;    // label id -> original string
  std::vector<std::string> node_names;     // node id -> original string

  std::size_t feature_dim() const { return features.numel() == 0 ? 0 : features.cols(); }
  bool has_labels() const { return !labels.empty(); }
};

struct EdgeLoadStats {
  std::size_t duplicates_dropped = 0;
  std::size_t self_loops_dropped = 0;
};

/// Features plus the string-id -> dense-id mapping used to build them.
struct FeatureTable {
  Tensor features;
  std::vector<int> labels;
  std::vector<std::string> label_names;
  std::vector<std::string> node_names;
  std::map<std::string, std::uint32_t> name_to_id;
};

/// One "src<TAB>dst" pair per line, '#' comments; integer node ids.
EdgeList load_edge_list(const std::string& path, EdgeLoadStats* stats = nullptr);

/// Same format with node ids resolved through a name table.
EdgeList load_edge_list(const std::string& path,
                        const std::map<std::string, std::uint32_t>& name_to_id,
                        EdgeLoadStats* stats = nullptr);

/// "node_id<TAB>b_1<TAB>...<TAB>b_D" per line.
FeatureTable load_features(const std::string& path);

/// Cora-compatible content rows: "node_id<TAB>b_1...b_D<TAB>label".
FeatureTable load_cora_content(const std::string& path);

/// Validates edge endpoints against the feature table and assembles a graph.
AttributedGraph make_graph(FeatureTable table, EdgeList edges);

void write_edge_list(const std::string& path, const EdgeList& edges);
void write_features(const std::string& path, const AttributedGraph& g);
void write_labels(const std::string& path, const AttributedGraph& g);

/// Canonicalizes an arbitrary pair list: i < j, sorted, deduplicated.
EdgeList canonical_edges(EdgeList edges, EdgeLoadStats* stats = nullptr);

/// Link-prediction split. Positive sets partition the edge set; negative
/// sets are uniform non-edges disjoint from everything else.
struct EdgeSplit {
  EdgeList train_edges;
  EdgeList val_pos, val_neg;
  EdgeList test_pos, test_neg;
  double train_ratio = 0.0;
  double val_fraction = 0.0;
  std::uint64_t seed = 0;
  std::size_t n = 0;
};

/// Removed-edge counts round to nearest: |train| = round(ratio*|E|),
/// |val_pos| = round(val_fraction * removed), remainder to test.
EdgeSplit split_edges(const AttributedGraph& g, double train_ratio,
                      double val_fraction_of_removed, std::uint64_t seed);

/// Symmetric GCN normalization with self loops:
/// A~ = D~^{-1/2} (A + I) D~^{-1/2}.
CsrMatrix normalized_adjacency(const EdgeList& edges, std::size_t n);

/// Nodes with zero incident edges, ascending.
std::vector<std::uint32_t> isolated_nodes(const EdgeList& edges, std::size_t n);

/// Sorted neighbor lists (symmetric closure of the edge list).
std::vector<std::vector<std::uint32_t>> adjacency_lists(const EdgeList& edges, std::size_t n);

/// Writes edge-list files plus a JSON manifest under `dir`; the manifest is
/// sufficient to reproduce the split exactly.
void save_split(const EdgeSplit& split, const std::string& dir,
                const std::string& features_path, const std::string& features_format);

struct LoadedSplit {
  EdgeSplit split;
  std::string features_path;
  std::string features_format;  // "features" or "content"
};

LoadedSplit load_split(const std::string& manifest_path);

}  // namespace norad
