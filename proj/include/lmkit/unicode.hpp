#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace lmkit {

/// Decode one UTF-8 codepoint starting at byte i; advances i past it.
/// Malformed bytes are passed through one at a time (never throws), so
/// tokenization stays total on arbitrary input.
inline char32_t utf8_next(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  std::size_t len = 1;
  char32_t cp = b0;
  if (b0 >= 0xF0)
    len = 4, cp = b0 & 0x07u;
  else if (b0 >= 0xE0)
    len = 3, cp = b0 & 0x0Fu;
  else if (b0 >= 0xC0)
    len = 2, cp = b0 & 0x1Fu;
  if (len > 1) {
    if (i + len > s.size()) {
      ++i;
      return b0;  // truncated sequence
    }
    for (std::size_t j = 1; j < len; ++j) {
      const auto bj = static_cast<unsigned char>(s[i + j]);
      if ((bj & 0xC0u) != 0x80u) {
        ++i;
        return b0;  // broken continuation
      }
      cp = (cp << 6) | (bj & 0x3Fu);
    }
  }
  i += len;
  return cp;
}

/// Unicode White_Space property.
inline bool is_unicode_space(char32_t cp) {
  switch (cp) {
    case 0x0009:
    case 0x000A:
    case 0x000B:
    case 0x000C:
    case 0x000D:
    case 0x0020:
    case 0x0085:
    case 0x00A0:
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

/// Byte offsets of each codepoint start, plus s.size() as a sentinel.
/// Lets callers slice codepoint windows out of a UTF-8 string.
inline std::vector<std::size_t> codepoint_offsets(std::string_view s) {
  std::vector<std::size_t> off;
  std::size_t i = 0;
  while (i < s.size()) {
    off.push_back(i);
    utf8_next(s, i);
  }
  off.push_back(s.size());
  return off;
}

}  // namespace lmkit
