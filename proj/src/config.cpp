#include "sknn/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "sknn/error.hpp"

namespace sknn {
namespace {

[[noreturn]] void bad(std::size_t line, const std::string& what) {
  raise(ErrorCode::InvalidConfig, "config line " + std::to_string(line) + ": " + what);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool valid_key(std::string_view k) {
  return !k.empty() && std::all_of(k.begin(), k.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

class Cursor {
 public:
  Cursor(std::string_view text, std::size_t line) : s_(text), line_(line) {}

  void skip_ws() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t')) ++i_;
  }
  bool at_end() {
    skip_ws();
    return i_ >= s_.size() || s_[i_] == '#';
  }
  bool eat(char c) {
    skip_ws();
    if (i_ < s_.size() && s_[i_] == c) {
      ++i_;
      return true;
    }
    return false;
  }

  ConfigValue::Scalar scalar() {
    skip_ws();
    if (i_ >= s_.size()) bad(line_, "missing value");
    if (s_[i_] == '"') return quoted();
    std::size_t j = i_;
    while (j < s_.size() && s_[j] != ',' && s_[j] != ']' && s_[j] != '#' && s_[j] != ' ' &&
           s_[j] != '\t') {
      ++j;
    }
    std::string_view tok = s_.substr(i_, j - i_);
    i_ = j;
    if (tok == "true") return true;
    if (tok == "false") return false;
    std::int64_t iv = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), iv);
    if (ec == std::errc{} && p == tok.data() + tok.size()) return iv;
    double dv = 0.0;
    auto [q, ec2] = std::from_chars(tok.data(), tok.data() + tok.size(), dv);
    if (ec2 == std::errc{} && q == tok.data() + tok.size() && std::isfinite(dv)) return dv;
    bad(line_, "cannot read value '" + std::string(tok) + "' (strings need double quotes)");
  }

 private:
  std::string quoted() {
    ++i_;
    std::string out;
    while (i_ < s_.size() && s_[i_] != '"') {
      char c = s_[i_++];
      if (c == '\\') {
        if (i_ >= s_.size()) break;
        char e = s_[i_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: bad(line_, std::string("unknown escape \\") + e);
        }
      } else {
        out += c;
      }
    }
    if (i_ >= s_.size()) bad(line_, "unterminated string");
    ++i_;
    return out;
  }

  std::string_view s_;
  std::size_t line_;
  std::size_t i_ = 0;
};

template <class T>
const T* as(const ConfigValue::Scalar& s) {
  return std::get_if<T>(&s);
}

std::string where(const std::string& section, const std::string& key) {
  return section.empty() ? key : section + "." + key;
}

}  // namespace

ConfigDocument ConfigDocument::parse(std::string_view text) {
  ConfigDocument doc;
  std::string section;
  doc.sections_[section];
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (t.front() == '[') {
      auto close = t.find(']');
      if (close == std::string_view::npos) bad(line_no, "unterminated section header");
      auto rest = trim(t.substr(close + 1));
      if (!rest.empty() && rest.front() != '#') bad(line_no, "text after section header");
      auto name = trim(t.substr(1, close - 1));
      if (!valid_key(name)) bad(line_no, "bad section name");
      section = std::string(name);
      if (doc.sections_.count(section) && section.size()) bad(line_no, "duplicate section [" + section + "]");
      doc.sections_[section];
      continue;
    }
    auto eq = t.find('=');
    if (eq == std::string_view::npos) bad(line_no, "expected key = value");
    auto key = std::string(trim(t.substr(0, eq)));
    if (!valid_key(key)) bad(line_no, "bad key '" + key + "'");
    Cursor c(t.substr(eq + 1), line_no);
    ConfigValue v;
    v.line = line_no;
    if (c.eat('[')) {
      std::vector<ConfigValue::Scalar> items;
      if (!c.eat(']')) {
        do {
          items.push_back(c.scalar());
        } while (c.eat(','));
        if (!c.eat(']')) bad(line_no, "expected ']' (arrays must fit on one line)");
      }
      v.value = std::move(items);
    } else {
      v.value = c.scalar();
    }
    if (!c.at_end()) bad(line_no, "unexpected text after value");
    auto& sec = doc.sections_[section];
    if (sec.count(key)) bad(line_no, "duplicate key '" + where(section, key) + "'");
    sec.emplace(key, std::move(v));
  }
  return doc;
}

const ConfigValue* ConfigDocument::find(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}

namespace {

template <class T>
std::optional<T> scalar_of(const ConfigDocument& doc, const std::string& section, const std::string& key,
                           const char* type) {
  const auto* v = doc.find(section, key);
  if (!v) return std::nullopt;
  const auto* s = std::get_if<ConfigValue::Scalar>(&v->value);
  const T* x = s ? as<T>(*s) : nullptr;
  if constexpr (std::is_same_v<T, double>) {
    if (s && !x) {
      if (const auto* i = as<std::int64_t>(*s)) return static_cast<double>(*i);
    }
  }
  if (!x) bad(v->line, "'" + where(section, key) + "' must be " + type);
  return *x;
}

template <class T>
std::optional<std::vector<T>> list_of(const ConfigDocument& doc, const std::string& section,
                                      const std::string& key, const char* type) {
  const auto* v = doc.find(section, key);
  if (!v) return std::nullopt;
  std::vector<ConfigValue::Scalar> items;
  if (const auto* s = std::get_if<ConfigValue::Scalar>(&v->value)) {
    items.push_back(*s);
  } else {
    items = std::get<std::vector<ConfigValue::Scalar>>(v->value);
  }
  std::vector<T> out;
  for (const auto& item : items) {
    const T* x = as<T>(item);
    if (!x) bad(v->line, "'" + where(section, key) + "' must be a list of " + type);
    out.push_back(*x);
  }
  return out;
}

}  // namespace

std::optional<std::string> ConfigDocument::get_string(const std::string& section, const std::string& key) const {
  return scalar_of<std::string>(*this, section, key, "a string");
}
std::optional<std::int64_t> ConfigDocument::get_int(const std::string& section, const std::string& key) const {
  return scalar_of<std::int64_t>(*this, section, key, "an integer");
}
std::optional<double> ConfigDocument::get_real(const std::string& section, const std::string& key) const {
  return scalar_of<double>(*this, section, key, "a number");
}
std::optional<bool> ConfigDocument::get_bool(const std::string& section, const std::string& key) const {
  return scalar_of<bool>(*this, section, key, "true or false");
}
std::optional<std::vector<std::string>> ConfigDocument::get_strings(const std::string& section,
                                                                    const std::string& key) const {
  return list_of<std::string>(*this, section, key, "strings");
}
std::optional<std::vector<std::int64_t>> ConfigDocument::get_ints(const std::string& section,
                                                                  const std::string& key) const {
  return list_of<std::int64_t>(*this, section, key, "integers");
}

void ConfigDocument::require_known(const std::map<std::string, std::vector<std::string>>& allowed) const {
  for (const auto& [section, keys] : sections_) {
    auto a = allowed.find(section);
    if (a == allowed.end()) {
      if (keys.empty() && section.empty()) continue;
      raise(ErrorCode::InvalidConfig, "unknown section [" + section + "]");
    }
    for (const auto& [key, v] : keys) {
      if (std::find(a->second.begin(), a->second.end(), key) == a->second.end()) {
        bad(v.line, "unknown key '" + where(section, key) + "'");
      }
    }
  }
}

}  // namespace sknn
