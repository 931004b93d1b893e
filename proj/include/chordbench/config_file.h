#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chordbench {

/// One `key = value` line. Quoted strings are unquoted; lists keep their
/// bracketed text until read with as_list().
struct ConfigEntry {
  std::string key;
  std::string value;
  bool quoted = false;
  int line = 0;
};

/// Keys under one `[name]` header. Keys before the first header belong to
/// a section with an empty name.
struct ConfigSection {
  std::string name;
  int line = 0;
  std::vector<ConfigEntry> entries;

  const ConfigEntry* find(std::string_view key) const;
  bool has(std::string_view key) const { return find(key) != nullptr; }

  std::string get_string(std::string_view key, std::optional<std::string> fallback = std::nullopt) const;
  std::int64_t get_int(std::string_view key, std::optional<std::int64_t> fallback = std::nullopt) const;
  double get_double(std::string_view key, std::optional<double> fallback = std::nullopt) const;
  bool get_bool(std::string_view key, std::optional<bool> fallback = std::nullopt) const;
  std::vector<std::string> get_list(std::string_view key,
                                    std::optional<std::vector<std::string>> fallback = std::nullopt) const;

  /// ParseError naming the first key not in `allowed`.
  void require_known(const std::vector<std::string_view>& allowed) const;
};

struct ConfigFile {
  std::string source;
  std::vector<ConfigSection> sections;

  const ConfigSection* find(std::string_view name) const;
};

/// `#` starts a comment outside quotes. Duplicate keys in a section and
/// duplicate section names are errors.
ConfigFile parse_config(std::string_view text, std::string source = "<config>");
ConfigFile read_config(const std::filesystem::path& path);

}  // namespace chordbench
