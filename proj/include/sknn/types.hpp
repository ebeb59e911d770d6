#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace sknn {

/// Dense integer handle, distinct per domain so a LabelId never silently
/// stands in for a VertexId.
template <class Tag>
struct StrongId {
  std::uint32_t value = 0;

  constexpr StrongId() = default;
  constexpr explicit StrongId(std::uint32_t v) : value(v) {}
  constexpr std::size_t index() const { return value; }
  friend constexpr auto operator<=>(StrongId, StrongId) = default;
};

using LabelId = StrongId<struct LabelTag>;
using ClassId = StrongId<struct ClassTag>;
using VertexId = StrongId<struct VertexTag>;

/// Categorical token drawn from a per-feature alphabet.
struct Symbol {
  std::string token;
  friend bool operator==(const Symbol&, const Symbol&) = default;
};

enum class FeatureKind : std::uint8_t { Text, Real, Integer, Boolean, Symbol };

std::string_view to_string(FeatureKind kind) noexcept;
std::optional<FeatureKind> parse_feature_kind(std::string_view s) noexcept;

inline bool is_numeric(FeatureKind k) noexcept {
  return k == FeatureKind::Real || k == FeatureKind::Integer;
}

// Alternative order matches FeatureKind.
using FeatureValue = std::variant<std::string, double, std::int64_t, bool, Symbol>;

FeatureKind kind_of(const FeatureValue& v) noexcept;
/// Canonical textual form; the discrete identity used for interning.
std::string value_text(const FeatureValue& v);
/// Numeric view of a real/integer/boolean value.
double value_number(const FeatureValue& v);

struct WindowConfig {
  std::uint32_t before = 0;
  std::uint32_t after = 0;
  std::string pad_token = "<PAD>";

  std::size_t span() const { return std::size_t{before} + after + 1; }
  friend bool operator==(const WindowConfig&, const WindowConfig&) = default;
};

struct FeatureDef {
  std::string name;
  FeatureKind kind = FeatureKind::Symbol;
  std::set<std::string> alphabet;  // populated for Symbol features
  // For windowed numeric slots: index of the companion boolean feature that
  // is true where the slot fell outside the sequence.
  std::optional<std::size_t> pad_flag;

  friend bool operator==(const FeatureDef&, const FeatureDef&) = default;
};

struct Schema {
  std::vector<FeatureDef> features;
  std::optional<WindowConfig> window;  // set once a context window is applied

  std::size_t arity() const { return features.size(); }
  std::optional<std::size_t> find(std::string_view name) const;
  /// Same names, kinds and window; alphabets may differ.
  bool compatible_with(const Schema& other) const;
  void validate() const;

  friend bool operator==(const Schema&, const Schema&) = default;
};

/// Insertion-ordered string interner; ids are dense in [0, size).
class Vocabulary {
 public:
  std::uint32_t intern(std::string_view name);
  std::optional<std::uint32_t> find(std::string_view name) const;
  const std::string& name(std::uint32_t id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.names_ == b.names_;
  }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

struct Element {
  std::vector<FeatureValue> values;
  std::optional<LabelId> label;

  friend bool operator==(const Element&, const Element&) = default;
};

struct Sequence {
  std::vector<Element> elements;
  std::optional<ClassId> cls;

  std::size_t size() const { return elements.size(); }
  friend bool operator==(const Sequence&, const Sequence&) = default;
};

struct Dataset {
  Schema schema;
  std::vector<Sequence> sequences;
  Vocabulary labels;
  Vocabulary classes;

  std::size_t element_count() const;
  bool fully_labelled() const;
  /// Checks arity/kind conformance, nonempty sequences and registered ids.
  void validate() const;
};

/// Throws SchemaMismatch unless `e` conforms to `schema`.
void check_conforms(const Schema& schema, const Element& e);

}  // namespace sknn

template <class Tag>
struct std::hash<sknn::StrongId<Tag>> {
  std::size_t operator()(sknn::StrongId<Tag> id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};
