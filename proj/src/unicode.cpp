#include "bpekit/unicode.hpp"

#include <algorithm>
#include <array>

namespace bpekit::unicode {
namespace {

struct CodepointRange {
  char32_t first;
  char32_t last;
  CharClass cls;
};

#include "unicode_tables.inc"

constexpr std::array<CharClass, 128> make_ascii_table() {
  std::array<CharClass, 128> table{};
  for (char32_t cp = 0; cp < 128; ++cp) {
    CharClass cls = CharClass::kOther;
    for (const auto& r : kCodepointRanges) {
      if (cp >= r.first && cp <= r.last) {
        cls = r.cls;
        break;
      }
      if (r.first > cp) break;
    }
    table[cp] = cls;
  }
  return table;
}

constexpr auto kAscii = make_ascii_table();

}  // namespace

std::string_view table_version() { return kUnicodeVersion; }

CharClass classify(char32_t cp) {
  if (cp < 128) return kAscii[cp];
  const auto* begin = std::begin(kCodepointRanges);
  const auto* end = std::end(kCodepointRanges);
  const auto* it = std::upper_bound(
      begin, end, cp,
      [](char32_t value, const CodepointRange& r) { return value < r.first; });
  if (it == begin) return CharClass::kOther;
  --it;
  return cp <= it->last ? it->cls : CharClass::kOther;
}

std::optional<Decoded> decode_utf8(std::string_view text, std::size_t pos) {
  if (pos >= text.size()) return std::nullopt;
  const auto byte = [&](std::size_t i) {
    return static_cast<unsigned char>(text[i]);
  };
  const unsigned char lead = byte(pos);
  if (lead < 0x80) return Decoded{lead, 1};

  std::size_t length;
  char32_t cp;
  char32_t min_value;
  if ((lead & 0xE0) == 0xC0) {
    length = 2;
    cp = lead & 0x1F;
    min_value = 0x80;
  } else if ((lead & 0xF0) == 0xE0) {
    length = 3;
    cp = lead & 0x0F;
    min_value = 0x800;
  } else if ((lead & 0xF8) == 0xF0) {
    length = 4;
    cp = lead & 0x07;
    min_value = 0x10000;
  } else {
    return std::nullopt;
  }
  if (pos + length > text.size()) return std::nullopt;
  for (std::size_t i = 1; i < length; ++i) {
    const unsigned char cont = byte(pos + i);
    if ((cont & 0xC0) != 0x80) return std::nullopt;
    cp = (cp << 6) | (cont & 0x3F);
  }
  if (cp < min_value || cp > 0x10FFFF) return std::nullopt;
  if (cp >= 0xD800 && cp <= 0xDFFF) return std::nullopt;
  return Decoded{cp, length};
}

}  // namespace bpekit::unicode
