#include "sknn/bytes.hpp"

#include <openssl/evp.h>

#include <array>
#include <cmath>

namespace sknn {

void ByteWriter::value(const FeatureValue& v) {
  u8(static_cast<std::uint8_t>(kind_of(v)));
  std::visit(
      [this](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::string>) str(x);
        else if constexpr (std::is_same_v<T, double>) f64(x);
        else if constexpr (std::is_same_v<T, std::int64_t>) i64(x);
        else if constexpr (std::is_same_v<T, bool>) u8(x ? 1 : 0);
        else str(x.token);
      },
      v);
}

FeatureValue ByteReader::value() {
  switch (u8()) {
    case 0: return str();
    case 1: {
      double d = f64();
      if (!std::isfinite(d)) fail("non-finite real value");
      return d;
    }
    case 2: return i64();
    case 3: {
      auto b = u8();
      if (b > 1) fail("bad boolean");
      return b == 1;
    }
    case 4: return Symbol{str()};
    default: fail("bad feature value tag");
  }
}

void ByteWriter::schema(const Schema& s) {
  u64(s.features.size());
  for (const auto& f : s.features) {
    str(f.name);
    u8(static_cast<std::uint8_t>(f.kind));
    u64(f.alphabet.size());
    for (const auto& a : f.alphabet) str(a);
    u8(f.pad_flag ? 1 : 0);
    if (f.pad_flag) u32(static_cast<std::uint32_t>(*f.pad_flag));
  }
  u8(s.window ? 1 : 0);
  if (s.window) {
    u32(s.window->before);
    u32(s.window->after);
    str(s.window->pad_token);
  }
}

Schema ByteReader::schema() {
  Schema s;
  auto n = count(6);
  s.features.resize(n);
  for (auto& f : s.features) {
    f.name = str();
    auto kind = u8();
    if (kind > static_cast<std::uint8_t>(FeatureKind::Symbol)) fail("bad feature kind");
    f.kind = static_cast<FeatureKind>(kind);
    auto na = count(4);
    for (std::size_t i = 0; i < na; ++i) f.alphabet.insert(str());
    if (u8() == 1) f.pad_flag = u32();
  }
  if (u8() == 1) {
    WindowConfig w;
    w.before = u32();
    w.after = u32();
    w.pad_token = str();
    s.window = w;
  }
  try {
    s.validate();
  } catch (const Error& e) {
    fail(e.what());
  }
  return s;
}

std::size_t ByteReader::count(std::size_t min_item_bytes) {
  auto n = u64();
  if (min_item_bytes > 0 && n > remaining() / min_item_bytes) fail("count exceeds remaining data");
  return static_cast<std::size_t>(n);
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::string dataset_digest(const Dataset& d) {
  ByteWriter w;
  w.schema(d.schema);
  w.u64(d.labels.size());
  for (const auto& n : d.labels.names()) w.str(n);
  w.u64(d.classes.size());
  for (const auto& n : d.classes.names()) w.str(n);
  w.u64(d.sequences.size());
  for (const auto& s : d.sequences) {
    w.u8(s.cls ? 1 : 0);
    if (s.cls) w.u32(s.cls->value);
    w.u64(s.elements.size());
    for (const auto& e : s.elements) {
      w.u8(e.label ? 1 : 0);
      if (e.label) w.u32(e.label->value);
      for (const auto& v : e.values) w.value(v);
    }
  }
  return sha256_hex(w.bytes());
}

}  // namespace sknn
