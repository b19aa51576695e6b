#include "norad/metrics.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "norad/errors.hpp"
#include "norad/rng.hpp"

namespace norad {

namespace {

void check_labels(const std::vector<double>& scores, const std::vector<int>& labels,
                  const char* op) {
  if (scores.size() != labels.size()) {
    throw DimensionError(std::string(op) + ": scores and labels differ in length");
  }
  std::size_t pos = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw DomainError(std::string(op) + ": labels must be 0/1");
    pos += static_cast<std::size_t>(l);
  }
  if (pos == 0 || pos == labels.size()) {
    throw ContractError(std::string(op) + ": need at least one positive and one negative");
  }
}

double squared_dist(const Tensor& points, std::size_t i, const std::vector<double>& center) {
  const std::size_t d = points.cols();
  double s = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double diff = points(i, j) - center[j];
    s += diff * diff;
  }
  return s;
}

ClusterAssignment kmeans_once(const Tensor& points, std::size_t k, RngStream& rng,
                              std::size_t max_iters) {
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  std::vector<std::vector<double>> centers;
  centers.reserve(k);

  // k-means++ seeding: first center uniform, the rest D^2-weighted.
  std::vector<double> row(d);
  auto point_row = [&](std::size_t i) {
    for (std::size_t j = 0; j < d; ++j) row[j] = points(i, j);
    return row;
  };
  centers.push_back(point_row(rng.uniform_int(n)));
  std::vector<double> d2(n);
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) best = std::min(best, squared_dist(points, i, c));
      d2[i] = best;
      total += best;
    }
    std::size_t pick;
    if (total <= 0.0) {
      pick = rng.uniform_int(n);
    } else {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    }
    centers.push_back(point_row(pick));
  }

  std::vector<int> assign(n, 0);
  std::vector<std::size_t> counts(k);
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best_c = 0;
      double best = squared_dist(points, i, centers[0]);
      for (std::size_t c = 1; c < k; ++c) {
        const double dist = squared_dist(points, i, centers[c]);
        if (dist < best) {
          best = dist;
          best_c = static_cast<int>(c);
        }
      }
      if (assign[i] != best_c) {
        assign[i] = best_c;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;

    std::fill(counts.begin(), counts.end(), 0);
    for (auto& c : centers) std::fill(c.begin(), c.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      counts[assign[i]]++;
      for (std::size_t j = 0; j < d; ++j) centers[assign[i]][j] += points(i, j);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (double& v : centers[c]) v /= static_cast<double>(counts[c]);
      }
    }
    // Re-seed any empty cluster from the point farthest from its center.
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      std::size_t far_i = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[assign[i]] <= 1) continue;
        const double dist = squared_dist(points, i, centers[assign[i]]);
        if (dist > far_d) {
          far_d = dist;
          far_i = i;
        }
      }
      counts[assign[far_i]]--;
      assign[far_i] = static_cast<int>(c);
      counts[c] = 1;
      centers[c] = point_row(far_i);
      changed = true;
    }
  }

  ClusterAssignment result;
  result.assign = std::move(assign);
  result.k = k;
  for (std::size_t i = 0; i < n; ++i) {
    result.inertia += squared_dist(points, i, centers[result.assign[i]]);
  }
  return result;
}

/// Contingency counts with labels re-indexed densely; rows = a, cols = b.
std::vector<std::vector<long long>> contingency(const std::vector<int>& a,
                                                const std::vector<int>& b, std::size_t& na,
                                                std::size_t& nb) {
  std::map<int, std::size_t> ia, ib;
  for (int v : a) ia.emplace(v, ia.size());
  for (int v : b) ib.emplace(v, ib.size());
  na = ia.size();
  nb = ib.size();
  std::vector<std::vector<long long>> c(na, std::vector<long long>(nb, 0));
  for (std::size_t i = 0; i < a.size(); ++i) c[ia[a[i]]][ib[b[i]]]++;
  return c;
}

/// Assignment algorithm (potentials / shortest augmenting path, O(n^3)) on a
/// square cost matrix to minimize. Returns row index assigned to each column.
std::vector<int> solve_assignment(const std::vector<std::vector<long long>>& cost) {
  const int n = static_cast<int>(cost.size());
  std::vector<long long> u(n + 1, 0), v(n + 1, 0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<long long> minv(n + 1, LLONG_MAX);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      long long delta = LLONG_MAX;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const long long cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_of_col(n);
  for (int j = 1; j <= n; ++j) row_of_col[j - 1] = p[j] - 1;
  return row_of_col;
}

}  // namespace

std::vector<double> score_edges(const Tensor& z, const Tensor& b, const EdgeList& edges) {
  const std::size_t n = z.rows();
  const std::size_t k = z.cols();
  if (b.rows() != k || b.cols() != k) {
    throw DimensionError("score_edges: B must be " + std::to_string(k) + "x" +
                         std::to_string(k));
  }
  std::vector<double> scores;
  scores.reserve(edges.size());
  std::vector<double> bz(k);
  for (const Edge& e : edges) {
    if (e.first >= n || e.second >= n) {
      throw IndexError("score_edges: edge (" + std::to_string(e.first) + "," +
                       std::to_string(e.second) + ") out of range for n=" + std::to_string(n));
    }
    double fwd = 0.0, rev = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
      double rb = 0.0, rbt = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        rb += b(a, c) * z(e.second, c);
        rbt += b(c, a) * z(e.second, c);
      }
      fwd += z(e.first, a) * rb;
      rev += z(e.first, a) * rbt;
    }
    const double s_ij = 1.0 / (1.0 + std::exp(-fwd));
    const double s_ji = 1.0 / (1.0 + std::exp(-rev));
    scores.push_back(0.5 * (s_ij + s_ji));
  }
  return scores;
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_labels(scores, labels, "roc_auc");
  const std::size_t m = scores.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Midranks: tied scores share the average of their rank range.
  std::vector<double> rank(m);
  std::size_t i = 0;
  while (i < m) {
    std::size_t j = i;
    while (j + 1 < m && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) rank[order[t]] = mid;
    i = j + 1;
  }
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t t = 0; t < m; ++t) {
    if (labels[t] == 1) {
      rank_sum += rank[t];
      ++n_pos;
    }
  }
  const std::size_t n_neg = m - n_pos;
  return (rank_sum - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1)) /
         (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_labels(scores, labels, "average_precision");
  const std::size_t m = scores.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double ap = 0.0;
  std::size_t seen_pos = 0;
  for (std::size_t r = 0; r < m; ++r) {
    if (labels[order[r]] == 1) {
      ++seen_pos;
      ap += static_cast<double>(seen_pos) / static_cast<double>(r + 1);
    }
  }
  return ap / static_cast<double>(seen_pos);
}

double hits_at_k(const std::vector<double>& pos_scores, const std::vector<double>& neg_scores,
                 std::size_t k) {
  if (k < 1) throw ContractError("hits_at_k: k must be >= 1");
  if (neg_scores.size() < k) {
    throw ContractError("hits_at_k: need at least k=" + std::to_string(k) +
                        " negatives, got " + std::to_string(neg_scores.size()));
  }
  if (pos_scores.empty()) throw ContractError("hits_at_k: no positives");
  std::vector<double> neg = neg_scores;
  std::nth_element(neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(k - 1), neg.end(),
                   std::greater<double>());
  const double threshold = neg[k - 1];
  std::size_t hits = 0;
  for (double s : pos_scores) {
    if (s > threshold) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(pos_scores.size());
}

ClusterAssignment kmeans(const Tensor& points, std::size_t k, std::uint64_t seed,
                         std::size_t max_iters, std::size_t restarts) {
  const std::size_t n = points.rows();
  if (k < 1 || k > n) {
    throw ContractError("kmeans: k must be in [1, n], got k=" + std::to_string(k) +
                        " n=" + std::to_string(n));
  }
  ClusterAssignment best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < std::max<std::size_t>(restarts, 1); ++r) {
    RngStream rng = rng_stream(seed, "kmeans/" + std::to_string(r));
    ClusterAssignment cur = kmeans_once(points, k, rng, max_iters);
    if (cur.inertia < best.inertia) best = std::move(cur);
  }
  return best;
}

double nmi(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.empty()) throw ContractError("nmi: empty input");
  if (a.size() != b.size()) throw DimensionError("nmi: length mismatch");
  std::size_t na = 0, nb = 0;
  const auto c = contingency(a, b, na, nb);
  const double n = static_cast<double>(a.size());
  std::vector<double> pa(na, 0.0), pb(nb, 0.0);
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      pa[i] += static_cast<double>(c[i][j]);
      pb[j] += static_cast<double>(c[i][j]);
    }
  }
  double ha = 0.0, hb = 0.0, mi = 0.0;
  for (std::size_t i = 0; i < na; ++i) {
    const double p = pa[i] / n;
    if (p > 0) ha -= p * std::log(p);
  }
  for (std::size_t j = 0; j < nb; ++j) {
    const double p = pb[j] / n;
    if (p > 0) hb -= p * std::log(p);
  }
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      if (c[i][j] == 0) continue;
      const double pij = static_cast<double>(c[i][j]) / n;
      mi += pij * std::log(pij * n * n / (pa[i] * pb[j]));
    }
  }
  if (ha == 0.0 && hb == 0.0) return 1.0;
  if (ha == 0.0 || hb == 0.0) return 0.0;
  return std::clamp(mi / (0.5 * (ha + hb)), 0.0, 1.0);
}

double hungarian_accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.empty()) throw ContractError("hungarian_accuracy: empty input");
  if (pred.size() != truth.size()) throw DimensionError("hungarian_accuracy: length mismatch");
  std::size_t np = 0, nt = 0;
  const auto counts = contingency(pred, truth, np, nt);
  const std::size_t m = std::max(np, nt);
  // Minimize negated counts on a zero-padded square matrix.
  std::vector<std::vector<long long>> cost(m, std::vector<long long>(m, 0));
  for (std::size_t i = 0; i < np; ++i) {
    for (std::size_t j = 0; j < nt; ++j) cost[i][j] = -counts[i][j];
  }
  const std::vector<int> row_of_col = solve_assignment(cost);
  long long matched = 0;
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t i = static_cast<std::size_t>(row_of_col[j]);
    if (i < np && j < nt) matched += counts[i][j];
  }
  return static_cast<double>(matched) / static_cast<double>(pred.size());
}

}  // namespace norad
