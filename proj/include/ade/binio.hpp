#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ade/error.hpp"

// Little-endian primitives for the binary cache and bundle formats.
namespace ade::binio {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

inline void write_u32(std::string& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

inline void write_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

inline void write_bytes(std::string& out, std::string_view bytes) {
  write_u32(out, static_cast<std::uint32_t>(bytes.size()));
  out.append(bytes);
}

inline void write_floats(std::string& out, std::span<const float> values) {
  out.append(reinterpret_cast<const char*>(values.data()), values.size_bytes());
}

// Bounds-checked cursor over an in-memory buffer. Reading past the end
// raises CorruptionError.
class Reader {
 public:
  explicit Reader(std::string_view buffer) : buf_(buffer) {}

  std::uint32_t u32() {
    std::uint32_t v;
    std::memcpy(&v, take(4), 4);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    std::memcpy(&v, take(8), 8);
    return v;
  }
  std::string bytes() {
    const auto n = u32();
    return std::string(take(n), n);
  }
  std::string raw(std::size_t n) { return std::string(take(n), n); }
  void floats(std::span<float> out) {
    if (out.size() > remaining() / sizeof(float)) throw CorruptionError("truncated float payload");
    std::memcpy(out.data(), take(out.size_bytes()), out.size_bytes());
  }
  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return buf_.size() - pos_; }

 private:
  const char* take(std::size_t n) {
    if (n > remaining()) throw CorruptionError("unexpected end of data");
    const char* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::string_view buf_;
  std::size_t pos_ = 0;
};

}  // namespace ade::binio
