#!/usr/bin/env python3
"""Regenerate src/unicode_tables.cpp from Python's unicodedata.

Tables emitted:
  - fully expanded canonical decompositions (Hangul excluded, it is algorithmic)
  - nonzero canonical combining classes
  - primary composition pairs (composition exclusions already filtered out)
  - simple lowercase mappings
  - codepoint ranges for general categories P*/S* and for whitespace

Usage: python3 scripts/gen_unicode_tables.py > src/unicode_tables.cpp
"""
import sys
import unicodedata

MAX_CP = 0x110000
HANGUL_S_BASE = 0xAC00
HANGUL_S_COUNT = 11172


def one_level_decomp(cp):
    d = unicodedata.decomposition(chr(cp))
    if not d or d.startswith("<"):
        return None
    return [int(x, 16) for x in d.split()]


def is_hangul_syllable(cp):
    return HANGUL_S_BASE <= cp < HANGUL_S_BASE + HANGUL_S_COUNT


def full_decomp(cp, memo):
    if cp in memo:
        return memo[cp]
    d = one_level_decomp(cp)
    if d is None:
        memo[cp] = [cp]
        return memo[cp]
    out = []
    for c in d:
        out.extend(full_decomp(c, memo))
    memo[cp] = out
    return out


def main():
    memo = {}
    decomp_entries = []   # (cp, [expanded])
    ccc_entries = []      # (cp, ccc)
    compose_entries = []  # (a, b, composed)
    lower_entries = []    # (cp, lower)
    punct_ranges = []
    space_ranges = []

    extra_ws = {0x09, 0x0A, 0x0B, 0x0C, 0x0D, 0x85}

    cur_punct = None
    cur_space = None
    for cp in range(MAX_CP):
        if 0xD800 <= cp <= 0xDFFF:
            cat = "Cs"
        else:
            cat = unicodedata.category(chr(cp))

        if not is_hangul_syllable(cp):
            d = one_level_decomp(cp)
            if d is not None:
                expanded = full_decomp(cp, memo)
                if expanded != [cp]:
                    decomp_entries.append((cp, expanded))
                if len(d) == 2:
                    a, b = d
                    # Primary composite iff NFC actually recombines the pair;
                    # this filters composition exclusions and non-starter decompositions.
                    if unicodedata.normalize("NFC", chr(a) + chr(b)) == chr(cp):
                        compose_entries.append((a, b, cp))

        ccc = unicodedata.combining(chr(cp)) if cp < 0xD800 or cp > 0xDFFF else 0
        if ccc != 0:
            ccc_entries.append((cp, ccc))

        if cat[0] == "L" or cat == "Lt":
            low = chr(cp).lower()
            if low != chr(cp):
                if len(low) == 1:
                    lower_entries.append((cp, ord(low)))
                elif cp == 0x130:  # LATIN CAPITAL LETTER I WITH DOT ABOVE: simple mapping
                    lower_entries.append((cp, 0x69))
        elif cat[0] in ("C", "S", "P", "N", "M", "Z"):
            low = chr(cp).lower()
            if low != chr(cp) and len(low) == 1:
                lower_entries.append((cp, ord(low)))

        is_punct = cat[0] in ("P", "S")
        if is_punct:
            if cur_punct is None:
                cur_punct = [cp, cp]
            elif cur_punct[1] == cp - 1:
                cur_punct[1] = cp
            else:
                punct_ranges.append(tuple(cur_punct))
                cur_punct = [cp, cp]

        is_space = cat in ("Zs", "Zl", "Zp") or cp in extra_ws
        if is_space:
            if cur_space is None:
                cur_space = [cp, cp]
            elif cur_space[1] == cp - 1:
                cur_space[1] = cp
            else:
                space_ranges.append(tuple(cur_space))
                cur_space = [cp, cp]

    if cur_punct:
        punct_ranges.append(tuple(cur_punct))
    if cur_space:
        space_ranges.append(tuple(cur_space))

    compose_entries.sort(key=lambda t: (t[0], t[1]))
    decomp_entries.sort()
    ccc_entries.sort()
    lower_entries.sort()

    data = []
    index = []
    for cp, expanded in decomp_entries:
        index.append((cp, len(data), len(expanded)))
        data.extend(expanded)

    w = sys.stdout.write
    w("// Generated by scripts/gen_unicode_tables.py (Unicode %s). Do not edit.\n"
      % unicodedata.unidata_version)
    w("#include \"unicode_tables.hpp\"\n\n")
    w("namespace legalir::uni {\n\n")

    w("const DecompEntry kDecompIndex[] = {\n")
    for cp, off, n in index:
        w("    {0x%X, %d, %d},\n" % (cp, off, n))
    w("};\n")
    w("const std::size_t kDecompIndexSize = %d;\n\n" % len(index))

    w("const char32_t kDecompData[] = {\n")
    for i in range(0, len(data), 12):
        w("    " + ", ".join("0x%X" % c for c in data[i:i + 12]) + ",\n")
    w("};\n\n")

    w("const CccEntry kCcc[] = {\n")
    for cp, ccc in ccc_entries:
        w("    {0x%X, %d},\n" % (cp, ccc))
    w("};\n")
    w("const std::size_t kCccSize = %d;\n\n" % len(ccc_entries))

    w("const ComposeEntry kCompose[] = {\n")
    for a, b, c in compose_entries:
        w("    {0x%X, 0x%X, 0x%X},\n" % (a, b, c))
    w("};\n")
    w("const std::size_t kComposeSize = %d;\n\n" % len(compose_entries))

    w("const LowerEntry kLower[] = {\n")
    for cp, lo in lower_entries:
        w("    {0x%X, 0x%X},\n" % (cp, lo))
    w("};\n")
    w("const std::size_t kLowerSize = %d;\n\n" % len(lower_entries))

    w("const CpRange kPunctSymbol[] = {\n")
    for lo, hi in punct_ranges:
        w("    {0x%X, 0x%X},\n" % (lo, hi))
    w("};\n")
    w("const std::size_t kPunctSymbolSize = %d;\n\n" % len(punct_ranges))

    w("const CpRange kSpace[] = {\n")
    for lo, hi in space_ranges:
        w("    {0x%X, 0x%X},\n" % (lo, hi))
    w("};\n")
    w("const std::size_t kSpaceSize = %d;\n\n" % len(space_ranges))

    w("}  // namespace legalir::uni\n")


if __name__ == "__main__":
    main()
