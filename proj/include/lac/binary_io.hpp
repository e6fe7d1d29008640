#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>

#include "lac/error.hpp"

namespace lac {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  template <class T>
    requires std::is_arithmetic_v<T>
  void put(T value) {
    out_.write(reinterpret_cast<const char*>(&value), sizeof value);
  }

  void put_bytes(const void* data, std::size_t size) {
    out_.write(static_cast<const char*>(data),
               static_cast<std::streamsize>(size));
  }

  void put_string(std::string_view s) {
    put(static_cast<std::uint32_t>(s.size()));
    put_bytes(s.data(), s.size());
  }

 private:
  std::ostream& out_;
};

/// Reads what BinaryWriter wrote; any short read throws DataError naming
/// `what`.
class BinaryReader {
 public:
  BinaryReader(std::istream& in, std::string what)
      : in_(in), what_(std::move(what)) {}

  template <class T>
    requires std::is_arithmetic_v<T>
  T get() {
    T value{};
    get_bytes(&value, sizeof value);
    return value;
  }

  void get_bytes(void* data, std::size_t size) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
    if (static_cast<std::size_t>(in_.gcount()) != size) {
      throw DataError(what_ + ": truncated file");
    }
  }

  std::string get_string(std::uint32_t max_size = 1u << 20) {
    const auto n = get<std::uint32_t>();
    if (n > max_size) throw DataError(what_ + ": corrupt string length");
    std::string s(n, '\0');
    get_bytes(s.data(), n);
    return s;
  }

  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

  const std::string& what() const { return what_; }

 private:
  std::istream& in_;
  std::string what_;
};

}  // namespace lac
