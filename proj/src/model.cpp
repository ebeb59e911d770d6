#include "sknn/model.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "sknn/error.hpp"

namespace sknn {

Model::Model() : Model(Schema{}) {}

Model::Model(Schema schema)
    : schema_(std::move(schema)),
      vertex_label_(2),
      vertex_class_(2),
      succ_(2),
      pred_(2),
      exemplars_(2) {}

VertexId Model::vertex_for(std::string_view label) {
  auto id = labels_.intern(label);
  if (id >= label_vertex_.size()) label_vertex_.resize(id + 1);
  if (label_vertex_[id]) return *label_vertex_[id];
  VertexId v{static_cast<std::uint32_t>(vertex_label_.size())};
  vertex_label_.emplace_back(LabelId{id});
  vertex_class_.emplace_back();
  succ_.emplace_back();
  pred_.emplace_back();
  exemplars_.emplace_back();
  label_vertex_[id] = v;
  return v;
}

std::optional<VertexId> Model::find_vertex(std::string_view label) const {
  auto id = labels_.find(label);
  if (!id || *id >= label_vertex_.size()) return std::nullopt;
  return label_vertex_[*id];
}

std::optional<LabelId> Model::vertex_label(VertexId v) const {
  check_vertex(v);
  return vertex_label_[v.index()];
}

std::string Model::vertex_name(VertexId v) const {
  if (v == kInit) return "<init>";
  if (v == kEnd) return "<end>";
  return labels_.name(vertex_label(v)->value);
}

void Model::check_vertex(VertexId v) const {
  if (!contains(v)) raise(ErrorCode::UnknownVertex, "vertex " + std::to_string(v.value));
}

void Model::add_edge(VertexId from, VertexId to) {
  check_vertex(from);
  check_vertex(to);
  auto& s = succ_[from.index()];
  auto it = std::lower_bound(s.begin(), s.end(), to);
  if (it != s.end() && *it == to) return;
  s.insert(it, to);
  auto& p = pred_[to.index()];
  p.insert(std::lower_bound(p.begin(), p.end(), from), from);
}

bool Model::remove_edge(VertexId from, VertexId to) {
  if (!has_edge(from, to)) return false;
  auto& s = succ_[from.index()];
  s.erase(std::lower_bound(s.begin(), s.end(), to));
  auto& p = pred_[to.index()];
  p.erase(std::lower_bound(p.begin(), p.end(), from));
  return true;
}

bool Model::has_edge(VertexId from, VertexId to) const {
  if (!contains(from) || !contains(to)) return false;
  const auto& s = succ_[from.index()];
  return std::binary_search(s.begin(), s.end(), to);
}

std::vector<std::pair<VertexId, VertexId>> Model::edges() const {
  std::vector<std::pair<VertexId, VertexId>> out;
  for (std::uint32_t u = 0; u < succ_.size(); ++u) {
    for (auto v : succ_[u]) out.emplace_back(VertexId{u}, v);
  }
  return out;
}

std::size_t Model::edge_count() const {
  std::size_t n = 0;
  for (const auto& s : succ_) n += s.size();
  return n;
}

void Model::add_exemplar(VertexId v, Element e) {
  check_vertex(v);
  if (is_terminal(v)) raise(ErrorCode::UnknownVertex, "start/end vertices hold no exemplars");
  exemplars_[v.index()].push_back(std::move(e));
}

std::size_t Model::exemplar_count() const {
  std::size_t n = 0;
  for (const auto& x : exemplars_) n += x.size();
  return n;
}

bool Model::has_vertex_classes() const {
  for (std::size_t v = 2; v < vertex_class_.size(); ++v) {
    if (!vertex_class_[v]) return false;
  }
  return vertex_class_.size() > 2;
}

void Model::set_vertex_class(VertexId v, ClassId c) {
  check_vertex(v);
  vertex_class_[v.index()] = c;
}

std::vector<VertexId> Model::reachable_vertices() const {
  std::vector<bool> seen(vertex_count(), false);
  std::deque<VertexId> queue{kInit};
  seen[kInit.index()] = true;
  while (!queue.empty()) {
    auto u = queue.front();
    queue.pop_front();
    for (auto v : successors(u)) {
      if (!seen[v.index()]) {
        seen[v.index()] = true;
        queue.push_back(v);
      }
    }
  }
  std::vector<VertexId> out;
  for (std::uint32_t v = 2; v < vertex_count(); ++v) {
    if (seen[v]) out.push_back(VertexId{v});
  }
  return out;
}

Model build_model(const Dataset& dataset) {
  if (dataset.sequences.empty()) raise(ErrorCode::EmptyDataset, "no training sequences");
  Model model(dataset.schema);
  for (std::size_t si = 0; si < dataset.sequences.size(); ++si) {
    const auto& seq = dataset.sequences[si];
    if (seq.elements.empty()) raise(ErrorCode::EmptyDataset, "sequence of length 0");
    VertexId current = Model::kInit;
    for (std::size_t ei = 0; ei < seq.elements.size(); ++ei) {
      const auto& inst = seq.elements[ei];
      if (!inst.label) {
        raise(ErrorCode::UnlabelledElement, "sequence " + std::to_string(si) + ", element " +
                                                std::to_string(ei));
      }
      auto next = model.vertex_for(dataset.labels.name(inst.label->value));
      Element stored = inst;
      stored.label = model.vertex_label(next);
      model.add_exemplar(next, std::move(stored));
      model.add_edge(current, next);
      current = next;
    }
    model.add_edge(current, Model::kEnd);
  }
  return model;
}

std::string to_string(const Violation& v) {
  static constexpr const char* names[] = {
      "SpuriousEdge", "MissingEdge", "SpuriousInitEdge", "MissingInitEdge", "SpuriousEndEdge",
      "MissingEndEdge", "MissingVertex", "ExtraVertex", "BadTerminalEdge"};
  std::string out = names[static_cast<int>(v.kind)];
  out += "(" + v.from;
  if (!v.to.empty()) out += "," + v.to;
  return out + ")";
}

std::vector<Violation> validate_model(const Model& model, const Dataset& dataset) {
  using Pair = std::pair<std::string, std::string>;
  std::set<Pair> inner;
  std::set<std::string> first, last, seen;
  for (const auto& seq : dataset.sequences) {
    for (std::size_t i = 0; i < seq.elements.size(); ++i) {
      if (!seq.elements[i].label) continue;
      const auto& name = dataset.labels.name(seq.elements[i].label->value);
      seen.insert(name);
      if (i == 0) first.insert(name);
      if (i + 1 == seq.elements.size()) last.insert(name);
      if (i + 1 < seq.elements.size() && seq.elements[i + 1].label) {
        inner.emplace(name, dataset.labels.name(seq.elements[i + 1].label->value));
      }
    }
  }

  std::set<Pair> model_inner;
  std::set<std::string> model_first, model_last;
  std::vector<Violation> out;
  for (const auto& [u, v] : model.edges()) {
    if (v == Model::kInit || u == Model::kEnd || (u == Model::kInit && v == Model::kEnd)) {
      out.push_back({ViolationKind::BadTerminalEdge, model.vertex_name(u), model.vertex_name(v)});
    } else if (u == Model::kInit) {
      model_first.insert(model.vertex_name(v));
    } else if (v == Model::kEnd) {
      model_last.insert(model.vertex_name(u));
    } else {
      model_inner.emplace(model.vertex_name(u), model.vertex_name(v));
    }
  }

  for (const auto& name : seen) {
    if (!model.find_vertex(name)) out.push_back({ViolationKind::MissingVertex, name, ""});
  }
  for (std::uint32_t v = 2; v < model.vertex_count(); ++v) {
    auto name = model.vertex_name(VertexId{v});
    if (!seen.contains(name)) out.push_back({ViolationKind::ExtraVertex, name, ""});
  }
  for (const auto& p : model_inner) {
    if (!inner.contains(p)) out.push_back({ViolationKind::SpuriousEdge, p.first, p.second});
  }
  for (const auto& p : inner) {
    if (!model_inner.contains(p)) out.push_back({ViolationKind::MissingEdge, p.first, p.second});
  }
  for (const auto& n : model_first) {
    if (!first.contains(n)) out.push_back({ViolationKind::SpuriousInitEdge, n, ""});
  }
  for (const auto& n : first) {
    if (!model_first.contains(n)) out.push_back({ViolationKind::MissingInitEdge, n, ""});
  }
  for (const auto& n : model_last) {
    if (!last.contains(n)) out.push_back({ViolationKind::SpuriousEndEdge, n, ""});
  }
  for (const auto& n : last) {
    if (!model_last.contains(n)) out.push_back({ViolationKind::MissingEndEdge, n, ""});
  }
  return out;
}

std::span<const Element> vertex_exemplars(const Model& model, VertexId v) {
  if (!model.contains(v)) raise(ErrorCode::UnknownVertex, "vertex " + std::to_string(v.value));
  return model.exemplars(v);
}

}  // namespace sknn
