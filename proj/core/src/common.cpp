#include "srlp/common.hpp"

#include <array>
#include <charconv>
#include <cstdio>

#ifndef SRLP_VERSION
#define SRLP_VERSION "0.0.0"
#endif

namespace srlp {

ConfigError::ConfigError(std::string field, int line, const std::string& what)
    : std::runtime_error(what), field_(std::move(field)), line_(line) {}

Rng make_rng(std::uint64_t master_seed, Stream stream, std::uint64_t salt) {
  const auto tag = static_cast<std::uint64_t>(stream);
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(salt),
                    static_cast<std::uint32_t>(salt >> 32)};
  return Rng(seq);
}

std::string format_real(double value) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) return "nan";
  return std::string(buf.data(), end);
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(value));
  return std::string(buf.data());
}

std::string version_tag() { return std::string("srlp-") + SRLP_VERSION; }

}  // namespace srlp
