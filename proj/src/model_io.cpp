#include "sknn/model_io.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include "sknn/error.hpp"

namespace sknn {
namespace {

constexpr char kMagic[4] = {'S', 'K', 'N', 'N'};

enum Section : std::uint8_t {
  kSchema = 1,
  kLabels,
  kClasses,
  kVertices,
  kEdges,
  kExemplars,
  kFingerprint,
  kMetric,
  kSettings,
};

void section(ByteWriter& out, Section id, const ByteWriter& payload) {
  out.u8(id);
  out.u64(payload.bytes().size());
  out.raw(payload.bytes());
}

std::span<const std::uint8_t> expect_section(ByteReader& r, Section id) {
  if (r.u8() != id) r.fail("expected section " + std::to_string(id));
  auto len = r.u64();
  if (len > r.remaining()) r.fail("section " + std::to_string(id) + " overruns file");
  return r.raw(static_cast<std::size_t>(len));
}

void names(ByteWriter& w, const Vocabulary& v) {
  w.u64(v.size());
  for (const auto& n : v.names()) w.str(n);
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const ModelBundle& bundle) {
  const Model& m = bundle.model;
  ByteWriter out;
  for (char c : kMagic) out.u8(static_cast<std::uint8_t>(c));
  out.u16(kModelFormatVersion);

  ByteWriter s;
  s.schema(m.schema());
  section(out, kSchema, s);

  ByteWriter labels;
  names(labels, m.labels());
  section(out, kLabels, labels);

  ByteWriter classes;
  names(classes, m.classes());
  section(out, kClasses, classes);

  ByteWriter vertices;
  vertices.u64(m.vertex_count());
  for (std::uint32_t v = 0; v < m.vertex_count(); ++v) {
    auto label = m.vertex_label(VertexId{v});
    auto cls = m.vertex_class(VertexId{v});
    vertices.u8(static_cast<std::uint8_t>((label ? 1 : 0) | (cls ? 2 : 0)));
    vertices.u32(label ? label->value : 0);
    vertices.u32(cls ? cls->value : 0);
  }
  section(out, kVertices, vertices);

  ByteWriter edges;
  auto all = m.edges();
  edges.u64(all.size());
  for (const auto& [u, v] : all) {
    edges.u32(u.value);
    edges.u32(v.value);
  }
  section(out, kEdges, edges);

  ByteWriter exemplars;
  for (std::uint32_t v = 0; v < m.vertex_count(); ++v) {
    auto ex = m.exemplars(VertexId{v});
    exemplars.u64(ex.size());
    for (const auto& e : ex) {
      exemplars.u8(e.label ? 1 : 0);
      exemplars.u32(e.label ? e.label->value : 0);
      for (const auto& val : e.values) exemplars.value(val);
    }
  }
  section(out, kExemplars, exemplars);

  ByteWriter fp;
  fp.str(m.metric_fingerprint());
  section(out, kFingerprint, fp);

  ByteWriter metric;
  metric.u8(bundle.metric ? 1 : 0);
  if (bundle.metric) bundle.metric->serialize(metric);
  section(out, kMetric, metric);

  ByteWriter settings;
  settings.u32(bundle.query.k);
  settings.u8(bundle.query.rank_weighting ? 1 : 0);
  settings.u32(bundle.resample);
  section(out, kSettings, settings);
  return out.take();
}

ModelBundle deserialize_model(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  for (char c : kMagic) {
    if (r.u8() != static_cast<std::uint8_t>(c)) r.fail("bad magic");
  }
  if (auto version = r.u16(); version != kModelFormatVersion) {
    raise(ErrorCode::FormatVersionMismatch, "file version " + std::to_string(version) +
                                                ", expected " + std::to_string(kModelFormatVersion));
  }

  ByteReader schema_r(expect_section(r, kSchema));
  ModelBundle bundle{Model(schema_r.schema()), std::nullopt, {}, 0};
  Model& m = bundle.model;
  const std::size_t arity = m.schema().arity();

  ByteReader labels(expect_section(r, kLabels));
  auto nl = labels.count(4);
  for (std::size_t i = 0; i < nl; ++i) {
    auto name = labels.str();
    if (m.find_vertex(name)) labels.fail("duplicate label '" + name + "'");
    m.vertex_for(name);
  }

  ByteReader classes(expect_section(r, kClasses));
  auto nc = classes.count(4);
  for (std::size_t i = 0; i < nc; ++i) m.classes().intern(classes.str());

  ByteReader vertices(expect_section(r, kVertices));
  if (vertices.count(9) != m.vertex_count()) vertices.fail("vertex table size mismatch");
  for (std::uint32_t v = 0; v < m.vertex_count(); ++v) {
    auto flags = vertices.u8();
    auto label = vertices.u32();
    auto cls = vertices.u32();
    bool labelled = (flags & 1) != 0;
    if (labelled != !Model::is_terminal(VertexId{v}) ||
        (labelled && m.vertex_label(VertexId{v}) != LabelId{label})) {
      vertices.fail("vertex table disagrees with label table");
    }
    if (flags & 2) {
      if (cls >= m.classes().size()) vertices.fail("vertex class out of range");
      m.set_vertex_class(VertexId{v}, ClassId{cls});
    }
  }

  ByteReader edges(expect_section(r, kEdges));
  auto ne = edges.count(8);
  for (std::size_t i = 0; i < ne; ++i) {
    VertexId u{edges.u32()};
    VertexId v{edges.u32()};
    if (!m.contains(u) || !m.contains(v)) edges.fail("edge endpoint out of range");
    m.add_edge(u, v);
  }

  ByteReader exemplars(expect_section(r, kExemplars));
  for (std::uint32_t v = 0; v < m.vertex_count(); ++v) {
    auto n = exemplars.count(5);
    if (n > 0 && Model::is_terminal(VertexId{v})) exemplars.fail("exemplars on start/end vertex");
    for (std::size_t i = 0; i < n; ++i) {
      Element e;
      bool has_label = exemplars.u8() == 1;
      auto label = exemplars.u32();
      if (has_label) {
        if (label >= m.labels().size()) exemplars.fail("exemplar label out of range");
        e.label = LabelId{label};
      }
      e.values.reserve(arity);
      for (std::size_t f = 0; f < arity; ++f) e.values.push_back(exemplars.value());
      try {
        check_conforms(m.schema(), e);
      } catch (const Error& err) {
        exemplars.fail(err.what());
      }
      m.add_exemplar(VertexId{v}, std::move(e));
    }
  }

  ByteReader fp(expect_section(r, kFingerprint));
  m.set_metric_fingerprint(fp.str());

  ByteReader metric(expect_section(r, kMetric));
  if (metric.u8() == 1) {
    bundle.metric = FittedMetric::deserialize(metric);
    if (bundle.metric->fingerprint() != m.metric_fingerprint()) {
      metric.fail("embedded metric does not match the model fingerprint");
    }
  }

  ByteReader settings(expect_section(r, kSettings));
  bundle.query.k = settings.u32();
  bundle.query.rank_weighting = settings.u8() == 1;
  bundle.resample = settings.u32();
  if (bundle.query.k < 1) settings.fail("k must be at least 1");

  for (auto* part : {&schema_r, &labels, &classes, &vertices, &edges, &exemplars, &fp, &metric, &settings}) {
    if (!part->done()) part->fail("trailing bytes in section");
  }
  if (!r.done()) r.fail("trailing bytes after last section");
  return bundle;
}

void save_model(const ModelBundle& bundle, std::ostream& out) {
  auto bytes = serialize_model(bundle);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) raise(ErrorCode::Io, "failed to write model");
}

ModelBundle load_model(std::istream& in) {
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

void save_model(const ModelBundle& bundle, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
  save_model(bundle, out);
}

ModelBundle load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::Io, "cannot open '" + path.string() + "'");
  return load_model(in);
}

std::string model_digest(const ModelBundle& bundle) { return sha256_hex(serialize_model(bundle)); }

}  // namespace sknn
