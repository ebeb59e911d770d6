#include "sknn/induction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "sknn/error.hpp"

namespace sknn {
namespace {

class DistanceSource {
 public:
  DistanceSource(std::span<const Element> elements, const FittedMetric& metric)
      : elements_(elements), metric_(&metric), n_(elements.size()) {
    if (n_ <= kMaterializeLimit) {
      matrix_.assign(n_ * n_, 0.0);
      for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = i + 1; j < n_; ++j) {
          double d = metric.distance(elements[i], elements[j]);
          matrix_[i * n_ + j] = d;
          matrix_[j * n_ + i] = d;
        }
      }
    }
  }

  double operator()(std::size_t i, std::size_t j) const {
    if (!matrix_.empty()) return matrix_[i * n_ + j];
    return i == j ? 0.0 : metric_->distance(elements_[i], elements_[j]);
  }

  std::size_t size() const { return n_; }

 private:
  std::span<const Element> elements_;
  const FittedMetric* metric_;
  std::size_t n_;
  std::vector<double> matrix_;
};

// Renumbers cluster ids by first appearance.
void canonicalize(ClusterAssignment& a) {
  std::vector<std::int64_t> remap(a.cluster_count, -1);
  std::uint32_t next = 0;
  for (auto& c : a.element_to_cluster) {
    if (remap[c] < 0) remap[c] = next++;
    c = static_cast<std::uint32_t>(remap[c]);
  }
  if (!a.medoids.empty()) {
    std::vector<std::size_t> medoids(next);
    for (std::size_t old = 0; old < remap.size(); ++old) {
      if (remap[old] >= 0) medoids[static_cast<std::size_t>(remap[old])] = a.medoids[old];
    }
    a.medoids = std::move(medoids);
  }
  a.cluster_count = next;
}

ClusterAssignment k_medoids(const DistanceSource& d, std::size_t k, const ClusteringConfig& cfg) {
  const std::size_t n = d.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(order.begin(), order.end(), rng);

  // BUILD: greedily add the medoid that lowers the total distance the most.
  std::vector<std::size_t> medoids;
  std::vector<bool> is_medoid(n, false);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (medoids.size() < k) {
    double best_gain = -1.0;
    std::size_t best = n;
    for (auto i : order) {
      if (is_medoid[i]) continue;
      double gain = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        double dij = d(i, j);
        gain += std::isinf(nearest[j]) ? -dij : std::max(0.0, nearest[j] - dij);
      }
      if (best == n || gain > best_gain) {
        best_gain = gain;
        best = i;
      }
    }
    medoids.push_back(best);
    is_medoid[best] = true;
    for (std::size_t j = 0; j < n; ++j) nearest[j] = std::min(nearest[j], d(best, j));
  }

  // SWAP: apply the best improving (medoid, non-medoid) exchange per pass.
  // Each candidate is scored in O(n) from the nearest and second-nearest
  // medoid distances of every element.
  std::vector<std::size_t> near_slot(n);
  std::vector<double> near_d(n), second_d(n);
  auto refresh = [&] {
    for (std::size_t j = 0; j < n; ++j) {
      near_d[j] = second_d[j] = std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < k; ++s) {
        double dj = d(medoids[s], j);
        if (dj < near_d[j]) {
          second_d[j] = near_d[j];
          near_d[j] = dj;
          near_slot[j] = s;
        } else if (dj < second_d[j]) {
          second_d[j] = dj;
        }
      }
    }
  };
  refresh();
  double current = 0.0;
  for (double x : near_d) current += x;
  for (std::uint32_t iter = 0; iter < cfg.max_iterations; ++iter) {
    double best_delta = -1e-12 * std::max(1.0, current);
    std::size_t best_slot = k;
    std::size_t best_candidate = n;
    for (std::size_t slot = 0; slot < k; ++slot) {
      for (auto cand : order) {
        if (is_medoid[cand]) continue;
        double delta = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          double dh = d(cand, j);
          double kept = near_slot[j] == slot ? second_d[j] : near_d[j];
          delta += std::min(kept, dh) - near_d[j];
        }
        if (delta < best_delta) {
          best_delta = delta;
          best_slot = slot;
          best_candidate = cand;
        }
      }
    }
    if (best_slot == k) break;
    is_medoid[medoids[best_slot]] = false;
    is_medoid[best_candidate] = true;
    medoids[best_slot] = best_candidate;
    refresh();
    current = 0.0;
    for (double x : near_d) current += x;
  }

  ClusterAssignment a;
  a.cluster_count = k;
  a.medoids = medoids;
  a.element_to_cluster.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t best = 0;
    for (std::size_t s = 1; s < k; ++s) {
      if (d(medoids[s], j) < d(medoids[best], j)) best = s;
    }
    a.element_to_cluster[j] = static_cast<std::uint32_t>(best);
  }
  return a;
}

ClusterAssignment agglomerative(const DistanceSource& d, const Agglomerative& cfg) {
  const std::size_t n = d.size();
  std::vector<double> link(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) link[i * n + j] = d(i, j);
  std::vector<std::size_t> size(n, 1);
  std::vector<bool> active(n, true);
  std::vector<std::size_t> owner(n);
  std::iota(owner.begin(), owner.end(), 0);

  for (std::size_t merges = 0; merges + 1 < n; ++merges) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = n, bj = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (active[j] && link[i * n + j] < best) {
          best = link[i * n + j];
          bi = i;
          bj = j;
        }
      }
    }
    if (bi == n || best > cfg.distance_threshold) break;
    // Lance-Williams update of cluster bi absorbing bj.
    for (std::size_t m = 0; m < n; ++m) {
      if (!active[m] || m == bi || m == bj) continue;
      double a = link[bi * n + m];
      double b = link[bj * n + m];
      double merged = cfg.linkage == Linkage::Single     ? std::min(a, b)
                      : cfg.linkage == Linkage::Complete ? std::max(a, b)
                                                         : (a * static_cast<double>(size[bi]) +
                                                            b * static_cast<double>(size[bj])) /
                                                               static_cast<double>(size[bi] + size[bj]);
      link[bi * n + m] = merged;
      link[m * n + bi] = merged;
    }
    size[bi] += size[bj];
    active[bj] = false;
    for (auto& o : owner)
      if (o == bj) o = bi;
  }

  ClusterAssignment a;
  a.cluster_count = n;
  a.element_to_cluster.assign(owner.begin(), owner.end());
  return a;
}

}  // namespace

void ClusteringConfig::validate() const {
  if (max_iterations < 1) raise(ErrorCode::InvalidClusteringConfig, "max_iterations must be positive");
  if (auto* km = std::get_if<KMedoids>(&method); km && km->cluster_count < 1) {
    raise(ErrorCode::InvalidClusteringConfig, "cluster_count must be at least 1");
  }
  if (auto* ag = std::get_if<Agglomerative>(&method);
      ag && !(ag->distance_threshold > 0.0 && std::isfinite(ag->distance_threshold))) {
    raise(ErrorCode::InvalidClusteringConfig, "distance_threshold must be positive");
  }
}

std::optional<Linkage> parse_linkage(std::string_view s) noexcept {
  if (s == "single") return Linkage::Single;
  if (s == "complete") return Linkage::Complete;
  if (s == "average") return Linkage::Average;
  return std::nullopt;
}

std::string_view to_string(Linkage l) noexcept {
  switch (l) {
    case Linkage::Single: return "single";
    case Linkage::Complete: return "complete";
    case Linkage::Average: return "average";
  }
  return "?";
}

ClusterAssignment cluster_exemplars(std::span<const Element> elements, const FittedMetric& metric,
                                    const ClusteringConfig& cfg) {
  cfg.validate();
  if (elements.empty()) raise(ErrorCode::EmptyDataset, "nothing to cluster");
  ClusterAssignment a;
  if (auto* km = std::get_if<KMedoids>(&cfg.method)) {
    if (km->cluster_count > elements.size()) {
      raise(ErrorCode::ClusterCountExceedsElements,
            std::to_string(km->cluster_count) + " clusters for " + std::to_string(elements.size()) +
                " elements");
    }
    DistanceSource d(elements, metric);
    a = k_medoids(d, km->cluster_count, cfg);
  } else {
    DistanceSource d(elements, metric);
    a = agglomerative(d, std::get<Agglomerative>(cfg.method));
  }
  canonicalize(a);
  return a;
}

Model induce_structure(std::span<const Sequence> sequences, const FittedMetric& metric,
                       const ClusteringConfig& cfg, std::string_view class_name) {
  std::vector<Element> elements;
  for (const auto& s : sequences) {
    if (s.elements.empty()) raise(ErrorCode::EmptyDataset, "sequence of length 0");
    elements.insert(elements.end(), s.elements.begin(), s.elements.end());
  }
  auto assignment = cluster_exemplars(elements, metric, cfg);

  Model m(metric.schema());
  auto cls = ClassId{m.classes().intern(class_name)};
  std::vector<VertexId> vertex(assignment.cluster_count);
  for (std::size_t c = 0; c < assignment.cluster_count; ++c) {
    vertex[c] = m.vertex_for(std::string(class_name) + "#" + std::to_string(c));
    m.set_vertex_class(vertex[c], cls);
  }
  std::size_t idx = 0;
  for (const auto& s : sequences) {
    VertexId current = Model::kInit;
    for (std::size_t i = 0; i < s.size(); ++i, ++idx) {
      auto next = vertex[assignment.element_to_cluster[idx]];
      Element e = elements[idx];
      e.label = m.vertex_label(next);
      m.add_exemplar(next, std::move(e));
      m.add_edge(current, next);
      current = next;
    }
    m.add_edge(current, Model::kEnd);
  }
  return m;
}

Model assemble_classifier(std::span<const ClassSubgraph> subgraphs) {
  if (subgraphs.empty()) raise(ErrorCode::EmptySubgraphSet, "no class subgraphs");
  Model out(subgraphs.front().graph.schema());
  for (const auto& sub : subgraphs) {
    const Model& g = sub.graph;
    if (!g.schema().compatible_with(out.schema())) {
      raise(ErrorCode::SchemaMismatch, "subgraph '" + sub.class_name + "' has a different schema");
    }
    if (out.classes().find(sub.class_name)) {
      raise(ErrorCode::InvalidConfig, "duplicate class '" + sub.class_name + "'");
    }
    auto cls = ClassId{out.classes().intern(sub.class_name)};
    std::vector<VertexId> map(g.vertex_count());
    map[Model::kInit.index()] = Model::kInit;
    map[Model::kEnd.index()] = Model::kEnd;
    for (std::uint32_t v = 2; v < g.vertex_count(); ++v) {
      auto name = g.vertex_name(VertexId{v});
      if (out.find_vertex(name)) raise(ErrorCode::InvalidConfig, "vertex label '" + name + "' reused");
      map[v] = out.vertex_for(name);
      out.set_vertex_class(map[v], cls);
      for (auto e : g.exemplars(VertexId{v})) {
        e.label = out.vertex_label(map[v]);
        out.add_exemplar(map[v], std::move(e));
      }
    }
    for (const auto& [u, v] : g.edges()) out.add_edge(map[u.index()], map[v.index()]);
  }
  return out;
}

Model train_classifier(const Dataset& dataset, const FittedMetric& metric,
                       const ClusteringConfig& cfg) {
  std::vector<std::vector<Sequence>> by_class(dataset.classes.size());
  for (const auto& s : dataset.sequences) {
    if (!s.cls) raise(ErrorCode::MissingLabels, "sequence without a class");
    by_class[s.cls->index()].push_back(s);
  }
  std::vector<ClassSubgraph> subgraphs;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].empty()) continue;
    const auto& name = dataset.classes.name(static_cast<std::uint32_t>(c));
    subgraphs.push_back({name, induce_structure(by_class[c], metric, cfg, name)});
  }
  auto model = assemble_classifier(subgraphs);
  model.set_metric_fingerprint(metric.fingerprint());
  return model;
}

}  // namespace sknn
