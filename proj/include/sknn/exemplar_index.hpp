#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sknn/metrics.hpp"
#include "sknn/model.hpp"
#include "sknn/simd/kernels.hpp"

namespace sknn {

/// Kernel-ready copy of a model's exemplars, laid out per vertex as one
/// contiguous column per feature so each feature pass streams through memory.
///
/// Distances match FittedMetric::distance; MVDM terms may differ in the last
/// bits under AVX2. The scan is flat: every exemplar of a vertex is visited
/// once per query. An approximate index would replace `distances`.
///
/// Holds pointers to `metric`; it must outlive the index.
class ExemplarIndex {
 public:
  ExemplarIndex(const Model& model, const FittedMetric& metric,
                const simd::KernelTable& kernels = simd::active_kernels());

  /// Probe encoded once per position and shared across all vertices.
  struct Probe {
    std::vector<std::int32_t> codes;
    std::vector<double> reals;
    // Per MVDM feature: value distance from the probe's value to every code.
    std::vector<std::vector<double>> rows;
  };

  Probe prepare(const Element& probe) const;
  /// Distances from `probe` to every exemplar of `v`, in stored order.
  void distances(const Probe& probe, VertexId v, std::vector<double>& out) const;
  double n_dist(const Probe& probe, VertexId v, const NeighbourQuery& q,
                std::vector<double>& scratch) const;

  std::size_t size(VertexId v) const { return blocks_.at(v.index()).count; }
  const simd::KernelTable& kernels() const { return *kernels_; }

 private:
  struct Block {
    std::size_t count = 0;
    std::vector<std::int32_t> codes;  // feature-major, arity * count
    std::vector<double> reals;        // feature-major, arity * count
  };

  std::int32_t code_for(std::size_t feature, const FeatureValue& v) const;

  const FittedMetric* metric_;
  const simd::KernelTable* kernels_;
  std::vector<Block> blocks_;
  // Exact-encoded values present among exemplars but absent from the metric's
  // vocabulary, numbered after it so equality is still exact.
  std::vector<Vocabulary> extra_;
};

}  // namespace sknn
