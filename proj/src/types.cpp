#include "sknn/types.hpp"

#include <charconv>
#include <cmath>
#include <unordered_set>

#include "sknn/error.hpp"

namespace sknn {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnlabelledElement: return "UnlabelledElement";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::UnknownVertex: return "UnknownVertex";
    case ErrorCode::FormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorCode::CorruptModel: return "CorruptModel";
    case ErrorCode::MissingLabels: return "MissingLabels";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::NumericFeatureUnsupported: return "NumericFeatureUnsupported";
    case ErrorCode::InvalidMetricSpec: return "InvalidMetricSpec";
    case ErrorCode::NoFeasiblePath: return "NoFeasiblePath";
    case ErrorCode::UnclassifiableSequence: return "UnclassifiableSequence";
    case ErrorCode::InstanceTooLarge: return "InstanceTooLarge";
    case ErrorCode::FingerprintMismatch: return "FingerprintMismatch";
    case ErrorCode::MissingVertexClass: return "MissingVertexClass";
    case ErrorCode::ClusterCountExceedsElements: return "ClusterCountExceedsElements";
    case ErrorCode::EmptySubgraphSet: return "EmptySubgraphSet";
    case ErrorCode::InvalidClusteringConfig: return "InvalidClusteringConfig";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::NonFiniteCoordinate: return "NonFiniteCoordinate";
    case ErrorCode::DegenerateSplit: return "DegenerateSplit";
    case ErrorCode::WindowAlreadyApplied: return "WindowAlreadyApplied";
    case ErrorCode::Io: return "Io";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

void raise(ErrorCode code, const std::string& what) {
  throw Error(code, std::string(to_string(code)) + ": " + what);
}

std::string_view to_string(FeatureKind kind) noexcept {
  switch (kind) {
    case FeatureKind::Text: return "text";
    case FeatureKind::Real: return "real";
    case FeatureKind::Integer: return "integer";
    case FeatureKind::Boolean: return "boolean";
    case FeatureKind::Symbol: return "symbol";
  }
  return "?";
}

std::optional<FeatureKind> parse_feature_kind(std::string_view s) noexcept {
  for (auto k : {FeatureKind::Text, FeatureKind::Real, FeatureKind::Integer,
                 FeatureKind::Boolean, FeatureKind::Symbol}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

FeatureKind kind_of(const FeatureValue& v) noexcept {
  return static_cast<FeatureKind>(v.index());
}

std::string value_text(const FeatureValue& v) {
  struct Visitor {
    std::string operator()(const std::string& s) const { return s; }
    std::string operator()(double d) const {
      char buf[32];
      auto res = std::to_chars(buf, buf + sizeof buf, d);
      return std::string(buf, res.ptr);
    }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(const Symbol& s) const { return s.token; }
  };
  return std::visit(Visitor{}, v);
}

double value_number(const FeatureValue& v) {
  if (auto* d = std::get_if<double>(&v)) return *d;
  if (auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (auto* b = std::get_if<bool>(&v)) return *b ? 1.0 : 0.0;
  raise(ErrorCode::SchemaMismatch, "value is not numeric");
}

std::optional<std::size_t> Schema::find(std::string_view name) const {
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].name == name) return i;
  }
  return std::nullopt;
}

bool Schema::compatible_with(const Schema& other) const {
  if (arity() != other.arity() || window != other.window) return false;
  for (std::size_t i = 0; i < arity(); ++i) {
    const auto& a = features[i];
    const auto& b = other.features[i];
    if (a.name != b.name || a.kind != b.kind || a.pad_flag != b.pad_flag) return false;
  }
  return true;
}

void Schema::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& f : features) {
    if (!seen.insert(f.name).second) {
      raise(ErrorCode::SchemaMismatch, "duplicate feature name '" + f.name + "'");
    }
    if (f.pad_flag && (*f.pad_flag >= features.size() ||
                       features[*f.pad_flag].kind != FeatureKind::Boolean)) {
      raise(ErrorCode::SchemaMismatch, "bad pad flag on feature '" + f.name + "'");
    }
  }
}

std::uint32_t Vocabulary::intern(std::string_view name) {
  auto it = index_.find(std::string(name));
  if (it != index_.end()) return it->second;
  auto id = static_cast<std::uint32_t>(names_.size());
  names_.emplace_back(name);
  index_.emplace(names_.back(), id);
  return id;
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Dataset::element_count() const {
  std::size_t n = 0;
  for (const auto& s : sequences) n += s.size();
  return n;
}

bool Dataset::fully_labelled() const {
  for (const auto& s : sequences) {
    for (const auto& e : s.elements) {
      if (!e.label) return false;
    }
  }
  return true;
}

void check_conforms(const Schema& schema, const Element& e) {
  if (e.values.size() != schema.arity()) {
    raise(ErrorCode::SchemaMismatch, "element arity " + std::to_string(e.values.size()) +
                                         " != schema arity " + std::to_string(schema.arity()));
  }
  for (std::size_t i = 0; i < e.values.size(); ++i) {
    if (kind_of(e.values[i]) != schema.features[i].kind) {
      raise(ErrorCode::SchemaMismatch, "feature '" + schema.features[i].name + "' has kind " +
                                           std::string(to_string(kind_of(e.values[i]))));
    }
    if (auto* d = std::get_if<double>(&e.values[i]); d && !std::isfinite(*d)) {
      raise(ErrorCode::SchemaMismatch, "non-finite value in '" + schema.features[i].name + "'");
    }
  }
}

void Dataset::validate() const {
  schema.validate();
  for (const auto& s : sequences) {
    if (s.elements.empty()) raise(ErrorCode::EmptyDataset, "sequence of length 0");
    if (s.cls && s.cls->index() >= classes.size()) {
      raise(ErrorCode::SchemaMismatch, "unregistered class id");
    }
    for (const auto& e : s.elements) {
      check_conforms(schema, e);
      for (std::size_t i = 0; i < e.values.size(); ++i) {
        const auto& alphabet = schema.features[i].alphabet;
        auto* sym = std::get_if<Symbol>(&e.values[i]);
        if (sym && !alphabet.contains(sym->token)) {
          raise(ErrorCode::SchemaMismatch, "symbol '" + sym->token + "' not in alphabet of '" +
                                               schema.features[i].name + "'");
        }
      }
      if (e.label && e.label->index() >= labels.size()) {
        raise(ErrorCode::SchemaMismatch, "unregistered label id");
      }
    }
  }
}

}  // namespace sknn
