#include "sknn/decoder.hpp"

#include <cmath>

#include "sknn/error.hpp"

namespace sknn {
namespace {

void check_binding(const Model& model, const FittedMetric& metric, const NeighbourQuery& q) {
  if (!model.metric_fingerprint().empty() && model.metric_fingerprint() != metric.fingerprint()) {
    raise(ErrorCode::FingerprintMismatch, "model was built with a different metric");
  }
  if (q.k < 1) raise(ErrorCode::InvalidConfig, "k must be at least 1");
}

std::vector<LabelId> labels_of(const Model& model, const std::vector<VertexId>& path) {
  std::vector<LabelId> out;
  out.reserve(path.size());
  for (auto v : path) out.push_back(*model.vertex_label(v));
  return out;
}

}  // namespace

Decoder::Decoder(const Model& model, const FittedMetric& metric, NeighbourQuery query,
                 const simd::KernelTable& kernels)
    : model_(&model),
      metric_(&metric),
      query_(query),
      index_((check_binding(model, metric, query), model), metric, kernels),
      reachable_(model.reachable_vertices()) {}

std::vector<double> Decoder::emissions(const Sequence& seq) const {
  const std::size_t length = seq.size();
  std::vector<double> out(model_->vertex_count() * length, kUnreachable);
  std::vector<double> scratch;
  for (std::size_t i = 0; i < length; ++i) {
    auto probe = index_.prepare(seq.elements[i]);
    for (auto v : reachable_) out[v.index() * length + i] = index_.n_dist(probe, v, query_, scratch);
  }
  return out;
}

std::optional<DecodeResult> Decoder::best_path(const std::vector<double>& em, std::size_t length,
                                               const std::vector<bool>& allowed,
                                               Trellis* trellis) const {
  const std::size_t nv = model_->vertex_count();
  auto ok = [&](VertexId v) {
    return !Model::is_terminal(v) && (allowed.empty() || allowed[v.index()]);
  };
  std::vector<double> cost(nv * length, kUnreachable);
  std::vector<VertexId> pred(nv * length, Model::kInit);

  for (auto v : model_->successors(Model::kInit)) {
    if (ok(v)) cost[v.index() * length] = em[v.index() * length];
  }
  for (std::size_t i = 1; i < length; ++i) {
    for (auto v : reachable_) {
      if (!ok(v)) continue;
      double best = kUnreachable;
      VertexId arg = Model::kInit;
      for (auto u : model_->predecessors(v)) {
        if (!ok(u)) continue;
        double c = cost[u.index() * length + i - 1];
        if (c < best) {
          best = c;
          arg = u;
        }
      }
      if (best < kUnreachable) {
        cost[v.index() * length + i] = best + em[v.index() * length + i];
        pred[v.index() * length + i] = arg;
      }
    }
  }

  double best = kUnreachable;
  std::optional<VertexId> last;
  for (auto v : model_->predecessors(Model::kEnd)) {
    if (!ok(v)) continue;
    double c = cost[v.index() * length + length - 1];
    if (c < best) {
      best = c;
      last = v;
    }
  }
  if (trellis) {
    trellis->vertex_count = nv;
    trellis->length = length;
    trellis->cost = cost;
    trellis->pred = pred;
  }
  if (!last) return std::nullopt;

  DecodeResult r;
  r.path.assign(length, Model::kInit);
  r.path[length - 1] = *last;
  for (std::size_t i = length - 1; i > 0; --i) {
    r.path[i - 1] = pred[r.path[i].index() * length + i];
  }
  r.labels = labels_of(*model_, r.path);
  r.total_cost = best;
  return r;
}

DecodeResult Decoder::label(const Sequence& seq, Trellis* trellis) const {
  if (seq.elements.empty()) raise(ErrorCode::NoFeasiblePath, "empty sequence");
  auto em = emissions(seq);
  auto r = best_path(em, seq.size(), {}, trellis);
  if (!r) {
    raise(ErrorCode::NoFeasiblePath,
          "no edge-respecting path of length " + std::to_string(seq.size()));
  }
  r->ndist_evaluations = static_cast<std::uint64_t>(seq.size()) * reachable_.size();
  return *r;
}

ClassifyResult Decoder::classify(const Sequence& seq) const {
  if (!model_->has_vertex_classes()) {
    raise(ErrorCode::MissingVertexClass, "model has no per-vertex classes");
  }
  if (seq.elements.empty()) raise(ErrorCode::UnclassifiableSequence, "empty sequence");
  const std::size_t length = seq.size();
  auto em = emissions(seq);
  auto joint = best_path(em, length, {}, nullptr);
  if (!joint) raise(ErrorCode::UnclassifiableSequence, "no class subgraph admits the sequence");

  ClassifyResult out;
  out.ndist_evaluations = static_cast<std::uint64_t>(length) * reachable_.size();
  joint->ndist_evaluations = out.ndist_evaluations;
  for (std::uint32_t c = 0; c < model_->classes().size(); ++c) {
    std::vector<bool> allowed(model_->vertex_count(), false);
    for (std::uint32_t v = 2; v < model_->vertex_count(); ++v) {
      allowed[v] = model_->vertex_class(VertexId{v}) == ClassId{c};
    }
    auto r = best_path(em, length, allowed, nullptr);
    out.per_class_costs[ClassId{c}] = r ? r->total_cost : kUnreachable;
  }
  out.cls = *model_->vertex_class(joint->path.front());
  out.total_cost = joint->total_cost;
  out.decode = std::move(*joint);
  return out;
}

DecodeResult label_sequence(const Model& model, const FittedMetric& metric, const Sequence& seq,
                            const NeighbourQuery& q) {
  return Decoder(model, metric, q).label(seq);
}

ClassifyResult classify_sequence(const Model& model, const FittedMetric& metric,
                                 const Sequence& seq, const NeighbourQuery& q) {
  return Decoder(model, metric, q).classify(seq);
}

DecodeResult brute_force_decode(const Model& model, const FittedMetric& metric,
                                const Sequence& seq, const NeighbourQuery& q) {
  check_binding(model, metric, q);
  const std::size_t length = seq.size();
  const std::size_t nv = model.vertex_count();
  if (length == 0) raise(ErrorCode::NoFeasiblePath, "empty sequence");
  const double space =
      std::pow(static_cast<double>(model.label_vertex_count()), static_cast<double>(length));
  if (space > 1e7) raise(ErrorCode::InstanceTooLarge, "path space too large to enumerate");

  std::vector<std::optional<double>> memo(nv * length);
  std::uint64_t evaluations = 0;
  auto step_cost = [&](VertexId v, std::size_t i) {
    auto& slot = memo[v.index() * length + i];
    if (!slot) {
      slot = n_dist(seq.elements[i], model.exemplars(v), q, metric);
      ++evaluations;
    }
    return *slot;
  };

  std::vector<VertexId> path(length);
  std::vector<VertexId> best_path;
  double best = kUnreachable;
  auto search = [&](auto&& self, VertexId prev, std::size_t i, double acc) -> void {
    if (i == length) {
      if (model.has_edge(prev, Model::kEnd) && acc < best) {
        best = acc;
        best_path = path;
      }
      return;
    }
    for (auto v : model.successors(prev)) {
      if (Model::is_terminal(v)) continue;
      path[i] = v;
      self(self, v, i + 1, acc + step_cost(v, i));
    }
  };
  search(search, Model::kInit, 0, 0.0);

  if (best_path.empty()) {
    raise(ErrorCode::NoFeasiblePath, "no edge-respecting path of length " + std::to_string(length));
  }
  DecodeResult r;
  r.path = best_path;
  r.labels = labels_of(model, r.path);
  r.total_cost = best;
  r.ndist_evaluations = evaluations;
  return r;
}

}  // namespace sknn
