#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "sknn/exemplar_index.hpp"
#include "sknn/metrics.hpp"
#include "sknn/model.hpp"

namespace sknn {

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

/// Dynamic-programming tables, vertex-major: cost[v * length + i].
struct Trellis {
  std::size_t vertex_count = 0;
  std::size_t length = 0;
  std::vector<double> cost;
  std::vector<VertexId> pred;

  double cost_at(VertexId v, std::size_t i) const { return cost[v.index() * length + i]; }
  VertexId pred_at(VertexId v, std::size_t i) const { return pred[v.index() * length + i]; }
};

struct DecodeResult {
  std::vector<LabelId> labels;  // model label ids
  std::vector<VertexId> path;
  double total_cost = 0.0;
  std::uint64_t ndist_evaluations = 0;
};

struct ClassifyResult {
  ClassId cls;
  double total_cost = 0.0;
  std::map<ClassId, double> per_class_costs;  // +inf for infeasible classes
  DecodeResult decode;
  std::uint64_t ndist_evaluations = 0;
};

/// Minimum-total-distance labelling over the model's transition graph.
///
/// At every position the decoder evaluates n_dist once for each label vertex
/// reachable from the start vertex, so one sequence costs exactly
/// |sequence| * |reachable vertices| evaluations. Predecessors are restricted
/// to graph edges, the first position to successors of the start vertex and
/// the last to predecessors of the end vertex. Ties resolve to the smallest
/// vertex id.
///
/// Holds references to `model` and `metric`; both must outlive the decoder.
/// const members are safe to call from many threads.
class Decoder {
 public:
  Decoder(const Model& model, const FittedMetric& metric, NeighbourQuery query,
          const simd::KernelTable& kernels = simd::active_kernels());

  DecodeResult label(const Sequence& seq, Trellis* trellis = nullptr) const;
  ClassifyResult classify(const Sequence& seq) const;

  const Model& model() const { return *model_; }
  const FittedMetric& metric() const { return *metric_; }
  const NeighbourQuery& query() const { return query_; }
  std::span<const VertexId> reachable() const { return reachable_; }

 private:
  // emissions[v * length + i]; +inf for vertices never evaluated.
  std::vector<double> emissions(const Sequence& seq) const;
  // Viterbi pass over vertices accepted by `allowed` (all when empty).
  std::optional<DecodeResult> best_path(const std::vector<double>& emissions, std::size_t length,
                                        const std::vector<bool>& allowed, Trellis* trellis) const;

  const Model* model_;
  const FittedMetric* metric_;
  NeighbourQuery query_;
  ExemplarIndex index_;
  std::vector<VertexId> reachable_;
};

DecodeResult label_sequence(const Model& model, const FittedMetric& metric, const Sequence& seq,
                            const NeighbourQuery& q);
ClassifyResult classify_sequence(const Model& model, const FittedMetric& metric,
                                 const Sequence& seq, const NeighbourQuery& q);

/// Exhaustive search over every edge-respecting start-to-end path of the
/// sequence's length, scored with the scalar reference n_dist. Refuses
/// instances with |label vertices|^|seq| above 1e7.
DecodeResult brute_force_decode(const Model& model, const FittedMetric& metric,
                                const Sequence& seq, const NeighbourQuery& q);

}  // namespace sknn
