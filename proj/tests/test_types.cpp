#include <doctest.h>

#include <cmath>

#include "sknn/error.hpp"
#include "sknn/types.hpp"

using namespace sknn;

TEST_CASE("feature kinds and values") {
  for (auto k : {FeatureKind::Text, FeatureKind::Real, FeatureKind::Integer, FeatureKind::Boolean, FeatureKind::Symbol})
    CHECK(parse_feature_kind(to_string(k)) == k);
  CHECK_FALSE(parse_feature_kind("complex"));
  CHECK(kind_of(FeatureValue{Symbol{"x"}}) == FeatureKind::Symbol);
  CHECK(kind_of(FeatureValue{std::int64_t{3}}) == FeatureKind::Integer);
  CHECK(value_text(FeatureValue{true}) == "true");
  CHECK(value_text(FeatureValue{std::int64_t{-4}}) == "-4");
  CHECK(value_number(FeatureValue{false}) == 0.0);
  CHECK(value_number(FeatureValue{2.5}) == 2.5);
  CHECK_THROWS_AS(value_number(FeatureValue{std::string("a")}), Error);
}

TEST_CASE("vocabulary interning") {
  Vocabulary v;
  CHECK(v.intern("b") == 0);
  CHECK(v.intern("a") == 1);
  CHECK(v.intern("b") == 0);
  CHECK(v.size() == 2);
  CHECK(v.find("a") == 1u);
  CHECK_FALSE(v.find("c"));
  CHECK(v.name(1) == "a");
}

TEST_CASE("schema and element conformance") {
  Schema s;
  s.features.push_back({"w", FeatureKind::Text, {}, std::nullopt});
  s.features.push_back({"p", FeatureKind::Symbol, {"N"}, std::nullopt});
  s.features.push_back({"x", FeatureKind::Real, {}, std::nullopt});
  CHECK(s.find("p") == 1u);
  CHECK_NOTHROW(s.validate());
  CHECK_NOTHROW(check_conforms(s, Element{{std::string("a"), Symbol{"N"}, 1.0}, std::nullopt}));
  CHECK_THROWS_AS(check_conforms(s, Element{{std::string("a"), Symbol{"N"}}, std::nullopt}), Error);
  CHECK_THROWS_AS(check_conforms(s, Element{{std::string("a"), std::string("N"), 1.0}, std::nullopt}), Error);
  CHECK_THROWS_AS(check_conforms(s, Element{{std::string("a"), Symbol{"N"}, NAN}, std::nullopt}), Error);

  Schema other = s;
  other.features[1].alphabet.insert("V");
  CHECK(s.compatible_with(other));
  other.window = WindowConfig{1, 1, "<PAD>"};
  CHECK_FALSE(s.compatible_with(other));

  Schema dup = s;
  dup.features.push_back({"w", FeatureKind::Text, {}, std::nullopt});
  CHECK_THROWS_AS(dup.validate(), Error);
}

TEST_CASE("dataset validation") {
  Dataset d;
  d.schema.features.push_back({"p", FeatureKind::Symbol, {"N"}, std::nullopt});
  d.sequences.push_back(Sequence{{Element{{Symbol{"N"}}, LabelId{d.labels.intern("X")}}}, std::nullopt});
  CHECK_NOTHROW(d.validate());
  CHECK(d.fully_labelled());
  CHECK(d.element_count() == 1);
  d.sequences.push_back(Sequence{{Element{{Symbol{"V"}}, std::nullopt}}, std::nullopt});
  CHECK_THROWS_AS(d.validate(), Error);
  CHECK_FALSE(d.fully_labelled());
  d.sequences.back() = Sequence{};
  try {
    d.validate();
    FAIL("expected EmptyDataset");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyDataset);
    CHECK(to_string(e.code()) == "EmptyDataset");
  }
}
