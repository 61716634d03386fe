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

#ifndef RESPCLASS_CLUSTERING_H_
#define RESPCLASS_CLUSTERING_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "respclass/corpus.h"
#include "respclass/embeddings.h"
#include "respclass/similarity.h"

namespace respclass {

struct Cluster {
  int32_t id = 0;
  std::vector<ResponseId> member_ids;  // ascending
  ResponseId centroid_id = 0;          // most frequent member, lowest id on ties
  int64_t total_count = 0;

  bool operator==(const Cluster&) const = default;
};

// A partition of response ids 0..n-1. Clusters are numbered by ascending
// minimal member id.
struct ClusterSet {
  std::vector<Cluster> clusters;
  std::vector<int32_t> assignment;  // response id -> cluster id

  size_t size() const { return clusters.size(); }
  bool operator==(const ClusterSet&) const = default;
};

// Builds a canonical ClusterSet from arbitrary groups. `counts` may be empty,
// in which case every response counts once.
ClusterSet make_cluster_set(std::vector<std::vector<ResponseId>> groups,
                            std::span<const int64_t> counts = {});

// Agglomerative clustering with complete linkage. Merges the closest pair of
// clusters while their linkage is strictly below `threshold`; ties go to the
// pair with the smaller (first, second) minimal member ids. Only stored pairs
// can ever be merged since absent pairs sit at distance 1.
ClusterSet complete_linkage_cluster(const SparseDistanceMatrix& d,
                                    double threshold,
                                    std::span<const int64_t> counts = {});

// Textbook O(n^3) agglomeration over a dense matrix; test oracle for n <= 16.
ClusterSet naive_complete_linkage_oracle(
    const std::vector<std::vector<double>>& dense, double threshold,
    std::span<const int64_t> counts = {});

struct KMeansResult {
  ClusterSet clusters;
  double inertia = 0.0;
  int iterations = 0;
};

// Lloyd's algorithm on the embedding rows with k distinct seeded starting rows
// and at most 100 iterations.
KMeansResult kmeans_baseline(const EmbeddingMatrix& mat, int k, uint64_t seed,
                             std::span<const int64_t> counts = {});

struct ClusterStats {
  size_t num_clusters = 0;
  size_t max_size = 0;
  std::map<size_t, size_t> size_histogram;  // size -> number of clusters
  double non_singleton_coverage = 0.0;      // occurrence-weighted
};

ClusterStats cluster_stats(const ClusterSet& cs, const ResponseTable& table);

std::string cluster_set_to_json(const ClusterSet& cs, const ResponseTable& table,
                                std::string_view config_hash = "");
ClusterSet cluster_set_from_json(std::string_view content,
                                 std::string* config_hash = nullptr);

}  // namespace respclass

#endif  // RESPCLASS_CLUSTERING_H_
