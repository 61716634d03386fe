/* Copyright 2026 The respclass Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "respclass/clustering.h"

#include <algorithm>
#include <limits>
#include <set>
#include <tuple>

#include "json.hpp"

namespace respclass {
namespace {

using nlohmann::json;

void check_threshold(double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "clustering threshold must lie in (0, 1]");
  }
}

}  // namespace

ClusterSet make_cluster_set(std::vector<std::vector<ResponseId>> groups,
                            std::span<const int64_t> counts) {
  size_t n = 0;
  for (auto& g : groups) {
    std::sort(g.begin(), g.end());
    n += g.size();
  }
  std::erase_if(groups, [](const auto& g) { return g.empty(); });
  std::sort(groups.begin(), groups.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  ClusterSet cs;
  cs.assignment.assign(n, -1);
  for (auto& g : groups) {
    Cluster c;
    c.id = static_cast<int32_t>(cs.clusters.size());
    c.centroid_id = g.front();
    int64_t best = -1;
    for (ResponseId r : g) {
      if (r < 0 || static_cast<size_t>(r) >= n || cs.assignment[r] != -1) {
        throw Error(ErrorKind::kInvalidArgument,
                    "cluster groups do not partition 0..n-1");
      }
      cs.assignment[r] = c.id;
      const int64_t count = counts.empty() ? 1 : counts[r];
      c.total_count += count;
      if (count > best) {
        best = count;
        c.centroid_id = r;
      }
    }
    c.member_ids = std::move(g);
    cs.clusters.push_back(std::move(c));
  }
  return cs;
}

ClusterSet complete_linkage_cluster(const SparseDistanceMatrix& d,
                                    double threshold,
                                    std::span<const int64_t> counts) {
  check_threshold(threshold);
  const int32_t n = d.size();
  // Clusters are keyed by their minimal member id. Only linkages that are
  // complete (every cross pair stored) and below threshold are kept as edges;
  // a merged cluster keeps an edge to N only if both parts had one.
  std::vector<std::vector<ResponseId>> members(n);
  std::vector<std::map<int32_t, double>> adj(n);
  using Edge = std::tuple<double, int32_t, int32_t>;
  std::set<Edge> queue;
  for (int32_t i = 0; i < n; ++i) members[i] = {i};
  for (const auto& [p, dist] : d.entries()) {
    if (dist < threshold) {
      adj[p.lo][p.hi] = dist;
      adj[p.hi][p.lo] = dist;
      queue.emplace(dist, p.lo, p.hi);
    }
  }
  auto drop_edges = [&](int32_t c) {
    for (const auto& [other, dist] : adj[c]) {
      queue.erase({dist, std::min(c, other), std::max(c, other)});
      adj[other].erase(c);
    }
    adj[c].clear();
  };
  while (!queue.empty()) {
    auto [dist, a, b] = *queue.begin();
    auto adj_a = adj[a];
    auto adj_b = adj[b];
    drop_edges(a);
    drop_edges(b);
    members[a].insert(members[a].end(), members[b].begin(), members[b].end());
    members[b].clear();
    for (const auto& [other, da] : adj_a) {
      if (other == b) continue;
      auto it = adj_b.find(other);
      if (it == adj_b.end()) continue;
      const double linkage = std::max(da, it->second);
      adj[a][other] = linkage;
      adj[other][a] = linkage;
      queue.emplace(linkage, std::min(a, other), std::max(a, other));
    }
  }
  return make_cluster_set(std::move(members), counts);
}

ClusterSet naive_complete_linkage_oracle(
    const std::vector<std::vector<double>>& dense, double threshold,
    std::span<const int64_t> counts) {
  check_threshold(threshold);
  const size_t n = dense.size();
  if (n > 16) {
    throw Error(ErrorKind::kInvalidArgument,
                "naive clustering oracle is limited to 16 responses");
  }
  std::vector<std::vector<ResponseId>> clusters;
  for (size_t i = 0; i < n; ++i) clusters.push_back({static_cast<ResponseId>(i)});
  while (clusters.size() > 1) {
    // Clusters stay sorted by minimal member, so (i, j) order is the tie rule.
    double best = std::numeric_limits<double>::infinity();
    size_t bi = 0, bj = 0;
    for (size_t i = 0; i < clusters.size(); ++i) {
      for (size_t j = i + 1; j < clusters.size(); ++j) {
        double linkage = 0.0;
        for (ResponseId x : clusters[i])
          for (ResponseId y : clusters[j]) linkage = std::max(linkage, dense[x][y]);
        if (linkage < best) {
          best = linkage;
          bi = i;
          bj = j;
        }
      }
    }
    if (!(best < threshold)) break;
    clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(),
                        clusters[bj].end());
    clusters.erase(clusters.begin() + static_cast<ptrdiff_t>(bj));
  }
  return make_cluster_set(std::move(clusters), counts);
}

KMeansResult kmeans_baseline(const EmbeddingMatrix& mat, int k, uint64_t seed,
                             std::span<const int64_t> counts) {
  const size_t n = mat.size();
  if (k < 1 || static_cast<size_t>(k) > n) {
    throw Error(ErrorKind::kInvalidArgument,
                "kmeans needs 1 <= k <= number of responses");
  }
  const auto dim = static_cast<size_t>(mat.dimension);
  std::vector<std::vector<double>> points;
  points.reserve(n);
  for (const auto& row : mat.rows) points.push_back(row.to_dense(mat.dimension));

  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<std::vector<double>> centers;
  for (int c = 0; c < k; ++c) centers.push_back(points[order[c]]);

  auto sqdist = [dim](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < dim; ++i) {
      const double diff = a[i] - b[i];
      s += diff * diff;
    }
    return s;
  };

  std::vector<int> assign(n, -1);
  KMeansResult result;
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sqdist(points[i], centers[0]);
      for (int c = 1; c < k; ++c) {
        const double dd = sqdist(points[i], centers[c]);
        if (dd < best_d) {
          best_d = dd;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    result.iterations = iter + 1;
    if (!changed) break;
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<size_t> sizes(k, 0);
    for (size_t i = 0; i < n; ++i) {
      ++sizes[assign[i]];
      for (size_t j = 0; j < dim; ++j) sums[assign[i]][j] += points[i][j];
    }
    for (int c = 0; c < k; ++c) {
      if (sizes[c] == 0) continue;  // empty cluster keeps its previous center
      for (size_t j = 0; j < dim; ++j)
        centers[c][j] = sums[c][j] / static_cast<double>(sizes[c]);
    }
  }
  std::vector<std::vector<ResponseId>> groups(k);
  for (size_t i = 0; i < n; ++i) {
    groups[assign[i]].push_back(static_cast<ResponseId>(i));
    result.inertia += sqdist(points[i], centers[assign[i]]);
  }
  result.clusters = make_cluster_set(std::move(groups), counts);
  return result;
}

ClusterStats cluster_stats(const ClusterSet& cs, const ResponseTable& table) {
  ClusterStats stats;
  stats.num_clusters = cs.clusters.size();
  int64_t total = 0, covered = 0;
  for (const Cluster& c : cs.clusters) {
    const size_t sz = c.member_ids.size();
    stats.max_size = std::max(stats.max_size, sz);
    ++stats.size_histogram[sz];
    int64_t occurrences = 0;
    for (ResponseId r : c.member_ids) {
      occurrences += static_cast<size_t>(r) < table.size() ? table[r].count : 1;
    }
    total += occurrences;
    if (sz > 1) covered += occurrences;
  }
  stats.non_singleton_coverage =
      total > 0 ? static_cast<double>(covered) / static_cast<double>(total) : 0.0;
  return stats;
}

std::string cluster_set_to_json(const ClusterSet& cs, const ResponseTable& table,
                                std::string_view config_hash) {
  json clusters = json::array();
  for (const Cluster& c : cs.clusters) {
    json members = json::array();
    for (ResponseId r : c.member_ids) {
      json m = {{"id", r}};
      if (static_cast<size_t>(r) < table.size()) {
        m["text"] = table[r].normalized_text;
        m["count"] = table[r].count;
      }
      members.push_back(std::move(m));
    }
    json entry = {{"id", c.id},
                  {"centroid_id", c.centroid_id},
                  {"total_count", c.total_count},
                  {"members", std::move(members)}};
    if (static_cast<size_t>(c.centroid_id) < table.size())
      entry["centroid_text"] = table[c.centroid_id].normalized_text;
    clusters.push_back(std::move(entry));
  }
  json doc = {{"config_hash", config_hash},
              {"num_responses", cs.assignment.size()},
              {"clusters", std::move(clusters)}};
  return doc.dump(1) + "\n";
}

ClusterSet cluster_set_from_json(std::string_view content,
                                 std::string* config_hash) {
  ClusterSet cs;
  try {
    json doc = json::parse(content);
    if (config_hash) *config_hash = doc.value("config_hash", "");
    cs.assignment.assign(doc.at("num_responses").get<size_t>(), -1);
    for (const json& entry : doc.at("clusters")) {
      Cluster c;
      c.id = entry.at("id").get<int32_t>();
      c.centroid_id = entry.at("centroid_id").get<ResponseId>();
      c.total_count = entry.at("total_count").get<int64_t>();
      for (const json& m : entry.at("members")) {
        const auto r = m.at("id").get<ResponseId>();
        if (r < 0 || static_cast<size_t>(r) >= cs.assignment.size() ||
            cs.assignment[r] != -1) {
          throw Error(ErrorKind::kDataError,
                      "cluster file does not partition the responses");
        }
        cs.assignment[r] = c.id;
        c.member_ids.push_back(r);
      }
      if (c.id != static_cast<int32_t>(cs.clusters.size())) {
        throw Error(ErrorKind::kDataError, "cluster ids must be 0..C-1 in order");
      }
      cs.clusters.push_back(std::move(c));
    }
    if (std::count(cs.assignment.begin(), cs.assignment.end(), -1) > 0) {
      throw Error(ErrorKind::kDataError, "cluster file leaves responses unassigned");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kDataError,
                std::string("malformed cluster file: ") + e.what());
  }
  return cs;
}

}  // namespace respclass
