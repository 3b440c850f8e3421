#!/usr/bin/env python3
"""Regenerates src/unicode_tables.inc from the interpreter's unicodedata.

The generated table maps codepoint ranges to the coarse classes used by the
pre-tokenizer. Output is committed so the build never depends on Python.
"""
import sys
import unicodedata

# Unicode White_Space property (PropList.txt); stable since Unicode 6.
WHITE_SPACE = [
    (0x0009, 0x000D), (0x0020, 0x0020), (0x0085, 0x0085), (0x00A0, 0x00A0),
    (0x1680, 0x1680), (0x2000, 0x200A), (0x2028, 0x2029), (0x202F, 0x202F),
    (0x205F, 0x205F), (0x3000, 0x3000),
]


def classify(cp):
    for lo, hi in WHITE_SPACE:
        if lo <= cp <= hi:
            return "Whitespace"
    cat = unicodedata.category(chr(cp))
    if cat[0] in "LM":
        return "Letter"
    if cat[0] == "N":
        return "Number"
    if cat[0] in "PS":
        return "Punctuation"
    return None


def main(out_path):
    ranges = []
    start, current = 0, classify(0)
    for cp in range(1, 0x110000):
        c = classify(cp)
        if c != current:
            if current is not None:
                ranges.append((start, cp - 1, current))
            start, current = cp, c
    if current is not None:
        ranges.append((start, 0x10FFFF, current))

    with open(out_path, "w", encoding="ascii") as f:
        f.write("// Generated by tools/gen_unicode_tables.py. Do not edit.\n")
        f.write(f'inline constexpr std::string_view kUnicodeVersion = "{unicodedata.unidata_version}";\n\n')
        f.write("inline constexpr CodepointRange kCodepointRanges[] = {\n")
        for lo, hi, c in ranges:
            f.write(f"    {{0x{lo:05X}, 0x{hi:05X}, CharClass::k{c}}},\n")
        f.write("};\n")
    print(f"{len(ranges)} ranges, unicode {unicodedata.unidata_version}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "src/unicode_tables.inc")
