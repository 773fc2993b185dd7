#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>

#include "pcatlas/error.hpp"

namespace pcatlas {

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file and renames it over the target, so a failed
// write never leaves a partial file behind.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents);

// Little-endian byte appender for the binary container formats.
class ByteWriter {
 public:
  template <typename T>
    requires std::is_arithmetic_v<T>
  void put(T value) {
    static_assert(std::endian::native == std::endian::little,
                  "big-endian hosts are not supported");
    char raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    bytes_.append(raw, sizeof(T));
  }

  void put_bytes(std::string_view raw) { bytes_.append(raw); }

  const std::string& bytes() const { return bytes_; }
  std::string release() { return std::move(bytes_); }

 private:
  std::string bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes, std::size_t offset = 0)
      : bytes_(bytes), offset_(offset) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  T get() {
    require(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + offset_, sizeof(T));
    offset_ += sizeof(T);
    return value;
  }

  std::string_view get_bytes(std::size_t count) {
    require(count);
    auto out = bytes_.substr(offset_, count);
    offset_ += count;
    return out;
  }

  std::size_t offset() const { return offset_; }
  std::size_t remaining() const { return bytes_.size() - offset_; }

 private:
  void require(std::size_t count) const {
    if (bytes_.size() - offset_ < count) {
      throw Error(ErrorKind::kParse, "unexpected end of data at byte offset " +
                                         std::to_string(offset_));
    }
  }

  std::string_view bytes_;
  std::size_t offset_;
};

}  // namespace pcatlas
