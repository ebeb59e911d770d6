#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sknn {

/// One value of a config file: string, integer, real, boolean, or a flat
/// array of those.
struct ConfigValue {
  using Scalar = std::variant<std::string, std::int64_t, double, bool>;
  std::variant<Scalar, std::vector<Scalar>> value;
  std::size_t line = 0;
};

/// Parsed key/value text in the TOML subset documented in docs/config.md:
/// `# comments`, `[section]` headers, `key = value` lines whose value is a
/// quoted string, integer, real, true/false, or a one-line `[a, b, ...]` array.
/// Keys outside any section live in section "".
class ConfigDocument {
 public:
  static ConfigDocument parse(std::string_view text);

  bool has_section(const std::string& section) const { return sections_.count(section) > 0; }
  const ConfigValue* find(const std::string& section, const std::string& key) const;

  std::optional<std::string> get_string(const std::string& section, const std::string& key) const;
  std::optional<std::int64_t> get_int(const std::string& section, const std::string& key) const;
  std::optional<double> get_real(const std::string& section, const std::string& key) const;
  std::optional<bool> get_bool(const std::string& section, const std::string& key) const;
  /// Accepts a single scalar as a one-element list.
  std::optional<std::vector<std::string>> get_strings(const std::string& section,
                                                      const std::string& key) const;
  std::optional<std::vector<std::int64_t>> get_ints(const std::string& section,
                                                    const std::string& key) const;

  /// Throws InvalidConfig naming the first key not in `allowed` for `section`,
  /// or the first section not listed at all.
  void require_known(const std::map<std::string, std::vector<std::string>>& allowed) const;

 private:
  std::map<std::string, std::map<std::string, ConfigValue>> sections_;
};

}  // namespace sknn
