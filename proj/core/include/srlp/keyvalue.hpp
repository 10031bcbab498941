#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace srlp {

/// One `key = value` line of a structured text file.
struct KeyValueEntry {
  std::string key;
  std::string value;
  int line = 0;
};

/// Parses `key = value` lines. `#` starts a comment; blank lines are skipped.
/// Keys may repeat (layout files list one `wall` per line). Throws ConfigError
/// on a line without `=` or with an empty key.
std::vector<KeyValueEntry> parse_key_values(std::string_view text);

std::string read_text_file(const std::string& path);

std::string trim(std::string_view s);
std::vector<std::string> split_list(std::string_view s);

/// Strict numeric parsing; throw ConfigError naming `field`.
double parse_real(std::string_view s, const std::string& field, int line);
long long parse_integer(std::string_view s, const std::string& field, int line);
bool parse_bool(std::string_view s, const std::string& field, int line);
std::vector<double> parse_reals(std::string_view s, const std::string& field, int line);

}  // namespace srlp
