#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sknn/metrics.hpp"
#include "sknn/model.hpp"

namespace sknn {

struct KMedoids {
  std::uint32_t cluster_count = 1;
};

enum class Linkage : std::uint8_t { Single, Complete, Average };

struct Agglomerative {
  Linkage linkage = Linkage::Average;
  double distance_threshold = 1.0;  // clusters closer than this are merged
};

struct ClusteringConfig {
  std::variant<KMedoids, Agglomerative> method = KMedoids{};
  std::uint64_t seed = 0;
  std::uint32_t max_iterations = 100;

  void validate() const;
};

std::optional<Linkage> parse_linkage(std::string_view s) noexcept;
std::string_view to_string(Linkage l) noexcept;

struct ClusterAssignment {
  std::vector<std::uint32_t> element_to_cluster;
  std::vector<std::size_t> medoids;  // k-medoids only, one per cluster
  std::size_t cluster_count = 0;
};

/// Partitions `elements` using only pairwise distances. Cluster ids are
/// numbered by first appearance, so element 0 is always in cluster 0.
///
/// k-medoids: greedy BUILD followed by PAM SWAP until no swap lowers the total
/// distance to the nearest medoid or `max_iterations` passes have run. The
/// seed orders candidate medoids, which only matters for exact ties.
/// Agglomerative: merges the closest pair of clusters under the chosen
/// linkage while that distance is at most the threshold.
///
/// The distance matrix is materialized for up to kMaterializeLimit elements
/// and computed on demand above that.
ClusterAssignment cluster_exemplars(std::span<const Element> elements, const FittedMetric& metric,
                                    const ClusteringConfig& cfg);

inline constexpr std::size_t kMaterializeLimit = 4096;

/// Graph for the sequences of one class: one vertex per cluster (labelled
/// "<class>#<cluster>"), edges between clusters of consecutive elements, and
/// start/end edges for the clusters of first/last elements.
Model induce_structure(std::span<const Sequence> sequences, const FittedMetric& metric,
                       const ClusteringConfig& cfg, std::string_view class_name);

struct ClassSubgraph {
  std::string class_name;
  Model graph;
};

/// Disjoint union of per-class graphs sharing one start and one end vertex;
/// every label vertex is tagged with its class.
Model assemble_classifier(std::span<const ClassSubgraph> subgraphs);

/// Groups `dataset` by sequence class, induces a graph per class and
/// assembles them. The result is bound to `metric`'s fingerprint.
Model train_classifier(const Dataset& dataset, const FittedMetric& metric,
                       const ClusteringConfig& cfg);

}  // namespace sknn
