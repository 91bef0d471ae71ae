#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ade::utf8 {

// Decoded code points paired with the byte offset each one starts at.
// Invalid bytes decode as U+FFFD and consume one byte.
struct Decoded {
  std::vector<char32_t> code_points;
  std::vector<std::size_t> byte_offsets;  // size() == code_points.size() + 1
};

Decoded decode(std::string_view text);
void append(std::string& out, char32_t cp);
std::string encode(std::u32string_view cps);
std::size_t length(std::string_view text);

}  // namespace ade::utf8
