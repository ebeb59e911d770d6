#include "sknn/exemplar_index.hpp"

#include "sknn/error.hpp"

namespace sknn {

ExemplarIndex::ExemplarIndex(const Model& model, const FittedMetric& metric,
                             const simd::KernelTable& kernels)
    : metric_(&metric), kernels_(&kernels) {
  if (!model.schema().compatible_with(metric.schema())) {
    raise(ErrorCode::SchemaMismatch, "model and metric schemas differ");
  }
  const auto features = metric.features();
  const std::size_t arity = features.size();
  extra_.resize(arity);
  blocks_.resize(model.vertex_count());
  for (std::uint32_t v = 0; v < model.vertex_count(); ++v) {
    auto ex = model.exemplars(VertexId{v});
    auto& b = blocks_[v];
    b.count = ex.size();
    b.codes.assign(arity * b.count, 0);
    b.reals.assign(arity * b.count, 0.0);
    for (std::size_t i = 0; i < ex.size(); ++i) {
      check_conforms(metric.schema(), ex[i]);
      for (std::size_t f = 0; f < arity; ++f) {
        if (features[f].encoding == Encoding::ZScore) {
          b.reals[f * b.count + i] = metric.zscore(f, ex[i]);
          continue;
        }
        auto code = metric.code_of(f, ex[i].values[f]);
        if (code < 0) {
          auto base = static_cast<std::uint32_t>(features[f].code_count());
          code = static_cast<std::int32_t>(base + extra_[f].intern(value_text(ex[i].values[f])));
        }
        b.codes[f * b.count + i] = code;
      }
    }
  }
}

std::int32_t ExemplarIndex::code_for(std::size_t f, const FeatureValue& v) const {
  auto code = metric_->code_of(f, v);
  if (code >= 0 || extra_[f].size() == 0) return code;
  if (auto id = extra_[f].find(value_text(v))) {
    return static_cast<std::int32_t>(metric_->features()[f].code_count() + *id);
  }
  return -1;
}

ExemplarIndex::Probe ExemplarIndex::prepare(const Element& probe) const {
  check_conforms(metric_->schema(), probe);
  const auto features = metric_->features();
  Probe p;
  p.codes.assign(features.size(), -1);
  p.reals.assign(features.size(), 0.0);
  p.rows.resize(features.size());
  for (std::size_t f = 0; f < features.size(); ++f) {
    const auto& st = features[f];
    if (st.encoding == Encoding::ZScore) {
      p.reals[f] = metric_->zscore(f, probe);
      continue;
    }
    p.codes[f] = code_for(f, probe.values[f]);
    if (st.term != Term::Mvdm) continue;
    // Row over every known code, then the exemplar-only codes (all uniform).
    const std::size_t known = st.code_count();
    auto& row = p.rows[f];
    row.resize(known + extra_[f].size());
    auto probe_row = metric_->mvdm_row(f, p.codes[f] < static_cast<std::int32_t>(known) ? p.codes[f] : -1);
    kernels_->l1_rows(st.probs, metric_->stride(), probe_row,
                      std::span<double>(row).first(known));
    if (extra_[f].size() > 0) {
      double to_uniform = 0.0;
      kernels_->l1_rows(metric_->mvdm_row(f, -1), metric_->stride(), probe_row,
                        std::span<double>(&to_uniform, 1));
      std::fill(row.begin() + static_cast<std::ptrdiff_t>(known), row.end(), to_uniform);
    }
  }
  return p;
}

void ExemplarIndex::distances(const Probe& probe, VertexId v, std::vector<double>& out) const {
  const auto& b = blocks_.at(v.index());
  out.assign(b.count, 0.0);
  if (b.count == 0) return;
  const auto features = metric_->features();
  std::span<double> acc(out);
  for (std::size_t f = 0; f < features.size(); ++f) {
    const auto& st = features[f];
    std::span<const std::int32_t> codes(b.codes.data() + f * b.count, b.count);
    switch (st.term) {
      case Term::Mismatch:
        kernels_->mismatch_accumulate(codes, probe.codes[f], st.coefficient, acc);
        break;
      case Term::Mvdm:
        kernels_->gather_accumulate(codes, probe.rows[f], st.coefficient, acc);
        break;
      case Term::SquaredDiff:
        kernels_->sqdiff_accumulate(std::span<const double>(b.reals.data() + f * b.count, b.count),
                                    probe.reals[f], st.coefficient, acc);
        break;
    }
  }
  if (metric_->takes_sqrt()) {
    kernels_->scale_sqrt(acc, 1.0 / static_cast<double>(features.size()));
  }
}

double ExemplarIndex::n_dist(const Probe& probe, VertexId v, const NeighbourQuery& q,
                             std::vector<double>& scratch) const {
  distances(probe, v, scratch);
  return aggregate_nearest(scratch, q);
}

}  // namespace sknn
