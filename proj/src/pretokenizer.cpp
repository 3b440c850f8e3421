#include "bpekit/pretokenizer.hpp"

#include "bpekit/unicode.hpp"

namespace bpekit {

using unicode::CharClass;

std::string_view category_name(PreTokenCategory category) {
  switch (category) {
    case PreTokenCategory::kLetters: return "Letters";
    case PreTokenCategory::kDigit: return "Digit";
    case PreTokenCategory::kWhitespace: return "Whitespace";
    case PreTokenCategory::kPunctuation: return "Punctuation";
    case PreTokenCategory::kOther: return "Other";
  }
  return "Other";
}

namespace detail {
namespace {

struct Unit {
  std::size_t length;
  CharClass cls;
};

// One codepoint, or one raw byte when the input is not valid UTF-8 there.
Unit unit_at(std::string_view text, std::size_t pos) {
  if (const auto d = unicode::decode_utf8(text, pos)) {
    return {d->length, unicode::classify(d->codepoint)};
  }
  return {1, CharClass::kOther};
}

std::size_t run_end(std::string_view text, std::size_t pos, CharClass cls) {
  while (pos < text.size()) {
    const Unit u = unit_at(text, pos);
    if (u.cls != cls) break;
    pos += u.length;
  }
  return pos;
}

}  // namespace

SpanInfo next_span(std::string_view text, std::size_t pos) {
  const Unit first = unit_at(text, pos);

  if (text[pos] == ' ' && pos + 1 < text.size()) {
    const Unit next = unit_at(text, pos + 1);
    if (next.cls == CharClass::kLetter) {
      return {run_end(text, pos + 1, CharClass::kLetter) - pos,
              PreTokenCategory::kLetters};
    }
    if (next.cls == CharClass::kPunctuation) {
      return {run_end(text, pos + 1, CharClass::kPunctuation) - pos,
              PreTokenCategory::kPunctuation};
    }
  }

  switch (first.cls) {
    case CharClass::kLetter:
      return {run_end(text, pos, CharClass::kLetter) - pos,
              PreTokenCategory::kLetters};
    case CharClass::kNumber:
      return {first.length, PreTokenCategory::kDigit};
    case CharClass::kWhitespace:
      return {run_end(text, pos, CharClass::kWhitespace) - pos,
              PreTokenCategory::kWhitespace};
    case CharClass::kPunctuation:
      return {run_end(text, pos, CharClass::kPunctuation) - pos,
              PreTokenCategory::kPunctuation};
    case CharClass::kOther:
      break;
  }
  return {first.length, PreTokenCategory::kOther};
}

}  // namespace detail

std::vector<PreToken> split(std::string_view text) {
  std::vector<PreToken> out;
  for_each_pretoken(text, [&](const PreToken& t) { out.push_back(t); });
  return out;
}

}  // namespace bpekit
