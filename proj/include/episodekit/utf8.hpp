#pragma once

#include <string>
#include <string_view>

namespace episodekit::utf8 {

// Decodes UTF-8 into Unicode scalar values. Throws episodekit::Error on
// malformed sequences, overlong forms and surrogates.
std::u32string decode(std::string_view bytes);

std::string encode(std::u32string_view scalars);

// Number of scalar values; same validation as decode.
std::size_t length(std::string_view bytes);

// Slice [begin, end) in scalar offsets.
std::string slice(std::string_view bytes, std::size_t begin, std::size_t end);

inline bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v' ||
         c == 0x00A0 || c == 0x2028 || c == 0x2029 || c == 0x3000 || (c >= 0x2000 && c <= 0x200A);
}

}  // namespace episodekit::utf8
