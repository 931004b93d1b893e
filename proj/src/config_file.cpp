#include "chordbench/config_file.h"

#include <cctype>
#include <charconv>

#include "chordbench/annotations.h"
#include "chordbench/error.h"

namespace chordbench {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string_view strip_comment(std::string_view line) {
  bool in_quote = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_quote = !in_quote;
    if (line[i] == '#' && !in_quote) return line.substr(0, i);
  }
  return line;
}

bool valid_name(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.') return false;
  }
  return true;
}

[[noreturn]] void fail(const std::string& source, int line, const std::string& message) {
  throw ParseError(source + ":" + std::to_string(line) + ": " + message);
}

std::string unquote(std::string_view s, const std::string& source, int line) {
  if (s.size() < 2 || s.front() != '"' || s.back() != '"') fail(source, line, "unterminated string");
  std::string_view body = s.substr(1, s.size() - 2);
  if (body.find('"') != std::string_view::npos) fail(source, line, "stray quote in string");
  return std::string(body);
}

}  // namespace

const ConfigEntry* ConfigSection::find(std::string_view key) const {
  for (const auto& e : entries) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

namespace {

const ConfigEntry& required(const ConfigSection& s, std::string_view key) {
  const ConfigEntry* e = s.find(key);
  if (!e) throw ParseError("section [" + s.name + "] (line " + std::to_string(s.line) + "): missing key '" +
                           std::string(key) + "'");
  return *e;
}

[[noreturn]] void bad_value(const ConfigSection& s, const ConfigEntry& e, const char* expected) {
  throw ParseError("section [" + s.name + "] line " + std::to_string(e.line) + ": '" + e.key + "' must be " +
                   expected + ", got '" + e.value + "'");
}

}  // namespace

std::string ConfigSection::get_string(std::string_view key, std::optional<std::string> fallback) const {
  if (!has(key) && fallback) return *fallback;
  return required(*this, key).value;
}

std::int64_t ConfigSection::get_int(std::string_view key, std::optional<std::int64_t> fallback) const {
  if (!has(key) && fallback) return *fallback;
  const ConfigEntry& e = required(*this, key);
  std::int64_t v = 0;
  const char* end = e.value.data() + e.value.size();
  auto [ptr, ec] = std::from_chars(e.value.data(), end, v);
  if (e.quoted || ec != std::errc() || ptr != end) bad_value(*this, e, "an integer");
  return v;
}

double ConfigSection::get_double(std::string_view key, std::optional<double> fallback) const {
  if (!has(key) && fallback) return *fallback;
  const ConfigEntry& e = required(*this, key);
  double v = 0;
  const char* end = e.value.data() + e.value.size();
  auto [ptr, ec] = std::from_chars(e.value.data(), end, v);
  if (e.quoted || ec != std::errc() || ptr != end) bad_value(*this, e, "a number");
  return v;
}

bool ConfigSection::get_bool(std::string_view key, std::optional<bool> fallback) const {
  if (!has(key) && fallback) return *fallback;
  const ConfigEntry& e = required(*this, key);
  if (!e.quoted && e.value == "true") return true;
  if (!e.quoted && e.value == "false") return false;
  bad_value(*this, e, "true or false");
}

std::vector<std::string> ConfigSection::get_list(std::string_view key,
                                                 std::optional<std::vector<std::string>> fallback) const {
  if (!has(key) && fallback) return *fallback;
  const ConfigEntry& e = required(*this, key);
  std::string_view v = e.value;
  if (e.quoted || v.size() < 2 || v.front() != '[' || v.back() != ']') bad_value(*this, e, "a [list]");
  std::vector<std::string> out;
  std::string_view body = trim(v.substr(1, v.size() - 2));
  while (!body.empty()) {
    const auto comma = body.find(',');
    std::string_view item = trim(body.substr(0, comma));
    if (item.empty()) bad_value(*this, e, "a list without empty items");
    out.push_back(item.front() == '"' ? unquote(item, "section [" + name + "]", e.line) : std::string(item));
    if (comma == std::string_view::npos) break;
    body = trim(body.substr(comma + 1));
    if (body.empty()) bad_value(*this, e, "a list without a trailing comma");
  }
  return out;
}

void ConfigSection::require_known(const std::vector<std::string_view>& allowed) const {
  for (const auto& e : entries) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == e.key;
    if (!ok) throw ParseError("section [" + name + "] line " + std::to_string(e.line) + ": unknown key '" + e.key + "'");
  }
}

const ConfigSection* ConfigFile::find(std::string_view name) const {
  for (const auto& s : sections) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

ConfigFile parse_config(std::string_view text, std::string source) {
  ConfigFile file;
  file.source = source;
  file.sections.push_back({"", 0, {}});
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view raw = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    std::string_view line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(source, line_no, "unterminated section header");
      std::string_view name = trim(line.substr(1, line.size() - 2));
      if (!valid_name(name)) fail(source, line_no, "bad section name '" + std::string(name) + "'");
      if (file.find(name)) fail(source, line_no, "duplicate section [" + std::string(name) + "]");
      file.sections.push_back({std::string(name), line_no, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(source, line_no, "expected 'key = value'");
    std::string_view key = trim(line.substr(0, eq));
    std::string_view value = trim(line.substr(eq + 1));
    if (!valid_name(key)) fail(source, line_no, "bad key '" + std::string(key) + "'");
    if (value.empty()) fail(source, line_no, "missing value for '" + std::string(key) + "'");
    ConfigSection& section = file.sections.back();
    if (section.find(key)) fail(source, line_no, "duplicate key '" + std::string(key) + "'");
    ConfigEntry entry{std::string(key), {}, false, line_no};
    if (value.front() == '"') {
      entry.value = unquote(value, source, line_no);
      entry.quoted = true;
    } else {
      if (value.front() == '[' && value.back() != ']') fail(source, line_no, "unterminated list");
      entry.value = std::string(value);
    }
    section.entries.push_back(std::move(entry));
  }
  return file;
}

ConfigFile read_config(const std::filesystem::path& path) { return parse_config(read_text_file(path), path.string()); }

}  // namespace chordbench
