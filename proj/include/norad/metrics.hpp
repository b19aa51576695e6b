#pragma once

#include <cstdint>
#include <vector>

#include "norad/graph.hpp"
#include "norad/tensor.hpp"

namespace norad {

/// Link scores: score(i,j) = sigmoid(z_i^T B z_j), symmetrized as
/// (s_ij + s_ji)/2 so asymmetric B cannot leak edge orientation.
std::vector<double> score_edges(const Tensor& z, const Tensor& b, const EdgeList& edges);

/// Probability that a uniformly random positive outranks a uniformly random
/// negative; ties count one half (midrank formulation).
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Step-wise average precision; ties broken deterministically by ascending
/// item index.
double average_precision(const std::vector<double>& scores, const std::vector<int>& labels);

/// Fraction of positives scoring strictly above the k-th highest negative.
double hits_at_k(const std::vector<double>& pos_scores, const std::vector<double>& neg_scores,
                 std::size_t k);

struct ClusterAssignment {
  std::vector<int> assign;
  std::size_t k = 0;
  double inertia = 0.0;
};

/// Lloyd's algorithm with k-means++ seeding; `restarts` independent runs,
/// best inertia kept (ties -> lowest restart index). Empty clusters are
/// re-seeded from the point farthest from its center. Deterministic.
ClusterAssignment kmeans(const Tensor& points, std::size_t k, std::uint64_t seed,
                         std::size_t max_iters = 100, std::size_t restarts = 10);

/// Normalized mutual information with arithmetic-mean normalization.
/// Both partitions single-cluster -> 1; exactly one single-cluster -> 0.
double nmi(const std::vector<int>& a, const std::vector<int>& b);

/// Accuracy under the cluster-to-class matching that maximizes agreement
/// (assignment algorithm on the contingency matrix).
double hungarian_accuracy(const std::vector<int>& pred, const std::vector<int>& truth);

}  // namespace norad
