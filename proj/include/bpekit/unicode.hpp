#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace bpekit::unicode {

// Coarse classes derived from the Unicode general category.
//   kLetter      L*, M*
//   kNumber      N*
//   kWhitespace  White_Space property
//   kPunctuation P*, S*
//   kOther       everything else (controls, format, private use, unassigned)
enum class CharClass : std::uint8_t {
  kOther,
  kLetter,
  kNumber,
  kWhitespace,
  kPunctuation,
};

// Version of the vendored category tables.
std::string_view table_version();

CharClass classify(char32_t cp);

struct Decoded {
  char32_t codepoint;
  std::size_t length;  // bytes consumed, 1..4
};

// Strict UTF-8 decode of the sequence starting at text[pos]. Rejects overlong
// forms, surrogates and values above U+10FFFF. Returns nullopt on any
// malformed sequence; the caller then treats text[pos] as a lone byte.
std::optional<Decoded> decode_utf8(std::string_view text, std::size_t pos);

}  // namespace bpekit::unicode
