#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <type_traits>

#include "srlp/common.hpp"

namespace srlp::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

template <typename T>
  requires std::is_trivially_copyable_v<T>
void put(std::string& out, const T& value) {
  out.append(reinterpret_cast<const char*>(&value), sizeof(T));
}

inline void put_bytes(std::string& out, std::string_view bytes) { out.append(bytes); }

/// Bounds-checked cursor over a byte buffer.
class Reader {
 public:
  explicit Reader(std::string_view bytes, std::size_t offset = 0) : bytes_(bytes), offset_(offset) {}

  template <typename T>
    requires std::is_trivially_copyable_v<T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + offset_, sizeof(T));
    offset_ += sizeof(T);
    return value;
  }

  std::string_view get_bytes(std::size_t n) {
    need(n);
    auto view = bytes_.substr(offset_, n);
    offset_ += n;
    return view;
  }

  void expect_magic(std::string_view magic) {
    if (get_bytes(magic.size()) != magic) throw FormatError("bad magic: expected '" + std::string(magic) + "'");
  }

  std::size_t offset() const { return offset_; }
  std::size_t remaining() const { return bytes_.size() - offset_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - offset_ < n) throw FormatError("unexpected end of data");
  }

  std::string_view bytes_;
  std::size_t offset_;
};

/// Appends the FNV-1a checksum of `payload` and writes the file atomically
/// enough for our purposes (write to temp, rename).
/// `payload` followed by its FNV-1a checksum.
std::string checksummed(const std::string& payload);

void write_checksummed_file(const std::string& path, const std::string& payload);
/// Writes already-checksummed bytes through a temporary file and a rename.
void write_file_atomic(const std::string& path, const std::string& bytes);

/// Reads the file, verifies and strips the trailing checksum.
std::string read_checksummed_file(const std::string& path);

}  // namespace srlp::io
