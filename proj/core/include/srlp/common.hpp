#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace srlp {

/// Raised when a caller breaks an operation's precondition (shape mismatch,
/// stale cache, stepping a finished episode, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed or unreadable on-disk data (checkpoints, snapshots, layouts).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration. Carries the offending key and, when it
/// came from a file, the 1-based line number (0 if unknown).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, int line, const std::string& what);

  const std::string& field() const noexcept { return field_; }
  int line() const noexcept { return line_; }

 private:
  std::string field_;
  int line_;
};

inline void require(bool condition, const char* message) {
  if (!condition) throw ContractViolation(message);
}

using Rng = std::mt19937_64;

/// Named sub-streams derived from one master seed.
enum class Stream : std::uint64_t {
  env = 1,
  exploration = 2,
  sampling = 3,
  init = 4,
  analysis = 5,
};

Rng make_rng(std::uint64_t master_seed, Stream stream, std::uint64_t salt = 0);

/// Shortest decimal text that round-trips the double exactly.
std::string format_real(double value);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t value);

std::string version_tag();

}  // namespace srlp
