#include <doctest.h>

#include <functional>
#include <map>

#include "fixtures.hpp"
#include "sknn/error.hpp"
#include "sknn/model.hpp"

using namespace sknn;
using namespace sknn::testing;

namespace {

Dataset tiny(std::vector<std::vector<std::pair<const char*, const char*>>> seqs) {
  Dataset d;
  d.schema.features.push_back({"w", FeatureKind::Text, {}, std::nullopt});
  for (const auto& s : seqs) {
    Sequence seq;
    for (const auto& [w, l] : s) seq.elements.push_back(Element{{std::string(w)}, LabelId{d.labels.intern(l)}});
    d.sequences.push_back(seq);
  }
  return d;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("two-element sequence builds a three-edge chain") {
  auto d = tiny({{{"a", "X"}, {"b", "Y"}}});
  auto m = build_model(d);
  CHECK(m.vertex_count() == 4);
  auto x = *m.find_vertex("X");
  auto y = *m.find_vertex("Y");
  CHECK(model_edges(m) == std::set<std::pair<std::string, std::string>>{{"<init>", "X"}, {"X", "Y"}, {"Y", "<end>"}});
  REQUIRE(m.exemplars(x).size() == 1);
  CHECK(std::get<std::string>(m.exemplars(x)[0].values[0]) == "a");
  CHECK(std::get<std::string>(vertex_exemplars(m, y)[0].values[0]) == "b");
  CHECK(vertex_exemplars(m, Model::kInit).empty());
  CHECK(vertex_exemplars(m, Model::kEnd).empty());
  CHECK(code_of([&] { vertex_exemplars(m, VertexId{99}); }) == ErrorCode::UnknownVertex);
  CHECK(validate_model(m, d).empty());
}

TEST_CASE("single-label sequences share one vertex") {
  auto d = tiny({{{"a", "X"}}, {{"b", "X"}}});
  auto m = build_model(d);
  CHECK(m.vertex_count() == 3);
  CHECK(m.edge_count() == 2);
  CHECK(m.exemplars(*m.find_vertex("X")).size() == 2);
  CHECK_FALSE(m.has_edge(Model::kInit, Model::kEnd));
}

TEST_CASE("build_model errors") {
  Dataset empty;
  CHECK(code_of([&] { build_model(empty); }) == ErrorCode::EmptyDataset);
  auto d = tiny({{{"a", "X"}}});
  d.sequences[0].elements.push_back(Element{{std::string("b")}, std::nullopt});
  CHECK(code_of([&] { build_model(d); }) == ErrorCode::UnlabelledElement);
}

TEST_CASE("validate_model reports injected defects") {
  auto d = tiny({{{"a", "X"}, {"b", "Y"}}, {{"c", "Y"}}});
  auto m = build_model(d);
  auto x = *m.find_vertex("X");
  auto y = *m.find_vertex("Y");

  auto spurious = m;
  spurious.add_edge(y, x);
  auto v = validate_model(spurious, d);
  REQUIRE(v.size() == 1);
  CHECK(v[0] == Violation{ViolationKind::SpuriousEdge, "Y", "X"});

  auto missing = m;
  missing.remove_edge(Model::kInit, y);
  v = validate_model(missing, d);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == ViolationKind::MissingInitEdge);
  CHECK(v[0].from == "Y");

  auto no_end = m;
  no_end.remove_edge(y, Model::kEnd);
  v = validate_model(no_end, d);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == ViolationKind::MissingEndEdge);
  CHECK_FALSE(to_string(v[0]).empty());

  auto extra_end = m;
  extra_end.add_edge(x, Model::kEnd);
  v = validate_model(extra_end, d);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == ViolationKind::SpuriousEndEdge);

  auto extra_vertex = m;
  extra_vertex.vertex_for("Z");
  v = validate_model(extra_vertex, d);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == ViolationKind::ExtraVertex);

  auto more = tiny({{{"a", "X"}, {"b", "Y"}}, {{"c", "Y"}}, {{"d", "W"}}});
  v = validate_model(m, more);
  CHECK(std::any_of(v.begin(), v.end(), [](const Violation& x) { return x.kind == ViolationKind::MissingVertex; }));
}

TEST_CASE("random datasets satisfy the construction conditions") {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t labels = uniform(rng, 1, 6);
    auto d = random_dataset(rng, mixed_schema(), labels, uniform(rng, 1, 12), 8);
    auto m = build_model(d);
    CHECK(validate_model(m, d).empty());
    CHECK(model_edges(m) == bigram_edges(d));
    std::set<std::uint32_t> seen;
    for (const auto& s : d.sequences)
      for (const auto& e : s.elements) seen.insert(e.label->value);
    CHECK(m.vertex_count() == seen.size() + 2);
    CHECK(m.exemplar_count() == d.element_count());
    CHECK(m.predecessors(Model::kInit).empty());
    CHECK(m.successors(Model::kEnd).empty());
    std::set<LabelId> distinct;
    for (std::uint32_t v = 2; v < m.vertex_count(); ++v) distinct.insert(*m.vertex_label(VertexId{v}));
    CHECK(distinct.size() == m.label_vertex_count());
    CHECK(build_model(d) == m);
  }
}

TEST_CASE("graph editing guards") {
  Model m;
  auto x = m.vertex_for("X");
  CHECK(m.vertex_for("X") == x);
  CHECK(m.vertex_name(Model::kInit) == "<init>");
  CHECK(m.vertex_name(Model::kEnd) == "<end>");
  CHECK_THROWS_AS(m.add_exemplar(Model::kInit, Element{}), Error);
  CHECK_THROWS_AS(m.add_edge(x, VertexId{40}), Error);
  m.add_edge(Model::kInit, x);
  m.add_edge(Model::kInit, x);
  CHECK(m.edge_count() == 1);
  CHECK(m.remove_edge(Model::kInit, x));
  CHECK_FALSE(m.remove_edge(Model::kInit, x));
  CHECK(m.reachable_vertices().empty());
}
