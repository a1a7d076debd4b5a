#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <vector>

#include "ugc_sentinel/error.hpp"

namespace ugcs {

// Density-based clustering on mutual-reachability distances (the core of
// the HDBSCAN family): core distances soften single-linkage chaining, the
// minimum spanning tree is cut at outlying edge weights, and components
// smaller than min_cluster_size become noise. Membership probabilities are
// normalized per-cluster kernel scores.

struct ClusterParams {
  std::size_t min_cluster_size = 5;
};

struct ClusterModel {
  std::size_t k = 0;
  std::vector<int> labels;                     // per point; -1 = noise
  std::vector<std::vector<double>> memberships;  // n x k, rows sum to 1
  std::vector<bool> noise;
  // Fitted state for scoring new points.
  std::vector<std::vector<std::vector<double>>> cluster_points;
  std::vector<double> bandwidths;  // per cluster

  // Membership probabilities of an arbitrary point under the fitted
  // clusters (uniform when every kernel underflows).
  std::vector<double> membership_of(const std::vector<double>& p) const {
    std::vector<double> scores(k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
      const double h2 = 2.0 * bandwidths[c] * bandwidths[c];
      double s = 0.0;
      for (const auto& q : cluster_points[c]) {
        double d2 = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
          const double diff = p[i] - q[i];
          d2 += diff * diff;
        }
        s += std::exp(-d2 / h2);
      }
      scores[c] = s / static_cast<double>(cluster_points[c].size());
    }
    const double total = std::accumulate(scores.begin(), scores.end(), 0.0);
    if (total <= 0.0)
      return std::vector<double>(k, 1.0 / static_cast<double>(k));
    for (auto& s : scores) s /= total;
    return scores;
  }
};

namespace cluster_detail {

inline double dist2(const std::vector<double>& a,
                    const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  void unite(int a, int b) { parent[static_cast<std::size_t>(find(a))] = find(b); }
};

// Nearest-rank quartile of a sorted vector.
inline double quartile(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  std::size_t rank = static_cast<std::size_t>(
      std::ceil(p * static_cast<double>(n)));
  if (rank == 0) rank = 1;
  if (rank > n) rank = n;
  return sorted[rank - 1];
}

}  // namespace cluster_detail

inline ClusterModel cluster_membership(
    const std::vector<std::vector<double>>& pts, const ClusterParams& params) {
  const std::size_t n = pts.size();
  if (n < params.min_cluster_size)
    throw ValidationError("cluster_membership: fewer points than min_cluster_size");
  for (const auto& p : pts)
    if (p.size() != pts[0].size())
      throw ValidationError("cluster_membership: inconsistent dimensions");

  // Core distance: distance to the min_cluster_size-th nearest neighbor
  // (capped by the available neighbor count).
  const std::size_t kth = std::min(params.min_cluster_size, n - 1);
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  std::vector<double> core(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = std::sqrt(cluster_detail::dist2(pts[i], pts[j]));
      dist[i][j] = d;
      dist[j][i] = d;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row;
    row.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) row.push_back(dist[i][j]);
    std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(kth - 1),
                     row.end());
    core[i] = row[kth - 1];
  }

  auto mreach = [&](std::size_t i, std::size_t j) {
    return std::max({core[i], core[j], dist[i][j]});
  };

  // Prim MST over mutual reachability.
  std::vector<bool> in_tree(n, false);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<int> best_from(n, -1);
  struct Edge {
    int a, b;
    double w;
  };
  std::vector<Edge> edges;
  edges.reserve(n - 1);
  in_tree[0] = true;
  for (std::size_t j = 1; j < n; ++j) {
    best[j] = mreach(0, j);
    best_from[j] = 0;
  }
  for (std::size_t it = 1; it < n; ++it) {
    std::size_t pick = 0;
    double pick_w = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (!in_tree[j] && best[j] < pick_w) {
        pick_w = best[j];
        pick = j;
      }
    }
    in_tree[pick] = true;
    edges.push_back({best_from[pick], static_cast<int>(pick), pick_w});
    for (std::size_t j = 0; j < n; ++j) {
      if (!in_tree[j]) {
        const double w = mreach(pick, j);
        if (w < best[j]) {
          best[j] = w;
          best_from[j] = static_cast<int>(pick);
        }
      }
    }
  }

  // Cut edges whose weight clears the Tukey fence over MST edge weights.
  std::vector<double> weights;
  weights.reserve(edges.size());
  for (const auto& e : edges) weights.push_back(e.w);
  std::sort(weights.begin(), weights.end());
  const double q1 = cluster_detail::quartile(weights, 0.25);
  const double q3 = cluster_detail::quartile(weights, 0.75);
  const double fence = q3 + 3.0 * (q3 - q1);

  cluster_detail::UnionFind uf(n);
  for (const auto& e : edges)
    if (e.w <= fence) uf.unite(e.a, e.b);

  // Components of at least min_cluster_size points become clusters, indexed
  // in order of their first member for determinism.
  std::vector<int> comp_of(n);
  std::map<int, std::vector<int>> comps;
  for (std::size_t i = 0; i < n; ++i) {
    comp_of[i] = uf.find(static_cast<int>(i));
    comps[comp_of[i]].push_back(static_cast<int>(i));
  }
  std::vector<std::vector<int>> clusters;
  for (std::size_t i = 0; i < n; ++i) {
    const auto it = comps.find(comp_of[i]);
    if (it == comps.end()) continue;
    if (it->second.size() >= params.min_cluster_size &&
        it->second.front() == static_cast<int>(i))
      clusters.push_back(it->second);
  }
  if (clusters.empty()) {
    // Every component fell below the size floor: treat the data as one
    // cluster rather than all-noise.
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    clusters.push_back(all);
  }

  ClusterModel model;
  model.k = clusters.size();
  model.labels.assign(n, -1);
  model.noise.assign(n, false);
  model.cluster_points.resize(model.k);
  model.bandwidths.resize(model.k);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    double core_sum = 0.0;
    for (const int i : clusters[c]) {
      model.labels[static_cast<std::size_t>(i)] = static_cast<int>(c);
      model.cluster_points[c].push_back(pts[static_cast<std::size_t>(i)]);
      core_sum += core[static_cast<std::size_t>(i)];
    }
    double h = core_sum / static_cast<double>(clusters[c].size());
    if (h <= 0.0) h = 1e-9;
    model.bandwidths[c] = h;
  }

  model.memberships.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (model.labels[i] < 0) {
      model.noise[i] = true;
      model.memberships[i].assign(model.k, 1.0 / static_cast<double>(model.k));
    } else {
      model.memberships[i] = model.membership_of(pts[i]);
    }
  }
  return model;
}

}  // namespace ugcs
