#include "srlp/keyvalue.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "srlp/common.hpp"

namespace srlp {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<KeyValueEntry> parse_key_values(std::string_view text) {
  std::vector<KeyValueEntry> out;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view raw = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    std::string line = trim(raw);
    if (line.empty()) {
      if (nl == text.size()) break;
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("", line_no, "line " + std::to_string(line_no) + ": expected 'key = value'");
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError("", line_no, "line " + std::to_string(line_no) + ": empty key");
    out.push_back({std::move(key), std::move(value), line_no});
    if (nl == text.size()) break;
  }
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> items;
  std::string current;
  for (char c : s) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      if (!current.empty()) items.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) items.push_back(std::move(current));
  return items;
}

namespace {

std::string where(const std::string& field, int line) {
  std::string w = "'" + field + "'";
  if (line > 0) w += " (line " + std::to_string(line) + ")";
  return w;
}

}  // namespace

double parse_real(std::string_view s, const std::string& field, int line) {
  std::string t = trim(s);
  double v = 0.0;
  auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || end != t.data() + t.size())
    throw ConfigError(field, line, where(field, line) + ": expected a real number, got '" + t + "'");
  return v;
}

long long parse_integer(std::string_view s, const std::string& field, int line) {
  std::string t = trim(s);
  long long v = 0;
  auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || end != t.data() + t.size())
    throw ConfigError(field, line, where(field, line) + ": expected an integer, got '" + t + "'");
  return v;
}

bool parse_bool(std::string_view s, const std::string& field, int line) {
  std::string t = trim(s);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError(field, line, where(field, line) + ": expected true/false, got '" + t + "'");
}

std::vector<double> parse_reals(std::string_view s, const std::string& field, int line) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) out.push_back(parse_real(item, field, line));
  return out;
}

}  // namespace srlp
