#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace bpekit {

enum class PreTokenCategory : std::uint8_t {
  kLetters,
  kDigit,
  kWhitespace,
  kPunctuation,
  kOther,
};

std::string_view category_name(PreTokenCategory category);

// A contiguous span of the input. `bytes` views the caller's buffer.
struct PreToken {
  std::string_view bytes;
  PreTokenCategory category;
  std::size_t offset;

  bool operator==(const PreToken&) const = default;
};

// Splits `text` into a lossless sequence of pre-tokens:
//   - an optional single leading U+0020 plus a maximal run of letters/marks
//   - every number codepoint (general category N) on its own, never with a
//     leading space
//   - maximal whitespace runs; a lone U+0020 directly before letters or
//     punctuation is attached to that run instead
//   - an optional single leading U+0020 plus a maximal run of punctuation or
//     symbols
//   - anything else, including each invalid UTF-8 byte, as a single unit
// No normalization is applied. Thread-safe; no shared state.
std::vector<PreToken> split(std::string_view text);

// Streaming form of split(). `visit` is called once per pre-token in order.
template <typename Visitor>
void for_each_pretoken(std::string_view text, Visitor&& visit);

namespace detail {
// Length in bytes and category of the pre-token starting at `pos`.
struct SpanInfo {
  std::size_t length;
  PreTokenCategory category;
};
SpanInfo next_span(std::string_view text, std::size_t pos);
}  // namespace detail

template <typename Visitor>
void for_each_pretoken(std::string_view text, Visitor&& visit) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto span = detail::next_span(text, pos);
    visit(PreToken{text.substr(pos, span.length), span.category, pos});
    pos += span.length;
  }
}

}  // namespace bpekit
