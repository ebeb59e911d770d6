#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sknn/types.hpp"

namespace sknn {

/// Transition graph whose label vertices carry training exemplars.
///
/// Vertex 0 is the distinguished start vertex and vertex 1 the end vertex;
/// label vertices follow in order of first appearance in the training data.
/// Each label vertex maps to exactly one label (the map is injective) and each
/// training element is stored at the vertex of its own label.
///
/// A Model is immutable once construction returns and may be read from many
/// decoding threads without synchronization.
class Model {
 public:
  static constexpr VertexId kInit{0};
  static constexpr VertexId kEnd{1};

  Model();
  explicit Model(Schema schema);

  const Schema& schema() const { return schema_; }
  const Vocabulary& labels() const { return labels_; }
  const Vocabulary& classes() const { return classes_; }
  Vocabulary& classes() { return classes_; }

  std::size_t vertex_count() const { return vertex_label_.size(); }
  std::size_t label_vertex_count() const { return vertex_count() - 2; }
  bool contains(VertexId v) const { return v.index() < vertex_count(); }
  static bool is_terminal(VertexId v) { return v == kInit || v == kEnd; }

  /// Creates the vertex for `label` (interned into the model's label table) or
  /// returns the existing one.
  VertexId vertex_for(std::string_view label);
  std::optional<VertexId> find_vertex(std::string_view label) const;
  std::optional<LabelId> vertex_label(VertexId v) const;
  /// Label name, or "<init>"/"<end>".
  std::string vertex_name(VertexId v) const;

  void add_edge(VertexId from, VertexId to);
  bool remove_edge(VertexId from, VertexId to);
  bool has_edge(VertexId from, VertexId to) const;
  std::span<const VertexId> successors(VertexId v) const { return succ_.at(v.index()); }
  std::span<const VertexId> predecessors(VertexId v) const { return pred_.at(v.index()); }
  /// All edges, sorted by (from, to).
  std::vector<std::pair<VertexId, VertexId>> edges() const;
  std::size_t edge_count() const;

  void add_exemplar(VertexId v, Element e);
  std::span<const Element> exemplars(VertexId v) const { return exemplars_.at(v.index()); }
  std::size_t exemplar_count() const;

  bool has_vertex_classes() const;
  std::optional<ClassId> vertex_class(VertexId v) const { return vertex_class_.at(v.index()); }
  void set_vertex_class(VertexId v, ClassId c);

  const std::string& metric_fingerprint() const { return metric_fingerprint_; }
  void set_metric_fingerprint(std::string fp) { metric_fingerprint_ = std::move(fp); }

  /// Label vertices reachable from kInit, ascending.
  std::vector<VertexId> reachable_vertices() const;

  friend bool operator==(const Model&, const Model&) = default;

 private:
  void check_vertex(VertexId v) const;

  Schema schema_;
  Vocabulary labels_;
  Vocabulary classes_;
  std::vector<std::optional<LabelId>> vertex_label_;
  std::vector<std::optional<VertexId>> label_vertex_;  // indexed by LabelId
  std::vector<std::optional<ClassId>> vertex_class_;
  std::vector<std::vector<VertexId>> succ_;
  std::vector<std::vector<VertexId>> pred_;
  std::vector<std::vector<Element>> exemplars_;
  std::string metric_fingerprint_;
};

/// Builds the transition graph from a fully labelled dataset: one vertex per
/// observed label, an edge for every pair of consecutive labels, start edges
/// for first labels and end edges for last labels.
Model build_model(const Dataset& dataset);

enum class ViolationKind {
  SpuriousEdge,
  MissingEdge,
  SpuriousInitEdge,
  MissingInitEdge,
  SpuriousEndEdge,
  MissingEndEdge,
  MissingVertex,
  ExtraVertex,
  BadTerminalEdge,
};

struct Violation {
  ViolationKind kind;
  std::string from;
  std::string to;

  friend bool operator==(const Violation&, const Violation&) = default;
};

std::string to_string(const Violation& v);

/// Checks the edge set against the three construction conditions, in both
/// directions. An empty result means the graph is exactly the one implied by
/// `dataset`.
std::vector<Violation> validate_model(const Model& model, const Dataset& dataset);

/// Throws UnknownVertex for ids outside the model.
std::span<const Element> vertex_exemplars(const Model& model, VertexId v);

}  // namespace sknn
