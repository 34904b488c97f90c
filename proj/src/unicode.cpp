#include "legalir/unicode.hpp"

#include <algorithm>

#include "legalir/errors.hpp"
#include "unicode_tables.hpp"

namespace legalir::uni {

namespace {

// Hangul syllable composition constants (UAX #15).
constexpr char32_t kSBase = 0xAC00;
constexpr char32_t kLBase = 0x1100;
constexpr char32_t kVBase = 0x1161;
constexpr char32_t kTBase = 0x11A7;
constexpr int kLCount = 19;
constexpr int kVCount = 21;
constexpr int kTCount = 28;
constexpr int kNCount = kVCount * kTCount;
constexpr int kSCount = kLCount * kNCount;

const DecompEntry* find_decomp(char32_t cp) {
    const DecompEntry* begin = kDecompIndex;
    const DecompEntry* end = kDecompIndex + kDecompIndexSize;
    auto it = std::lower_bound(begin, end, cp,
                               [](const DecompEntry& e, char32_t c) { return e.cp < c; });
    return (it != end && it->cp == cp) ? it : nullptr;
}

char32_t compose_pair(char32_t a, char32_t b) {
    // Hangul L+V and LV+T are algorithmic.
    if (a >= kLBase && a < kLBase + kLCount && b >= kVBase && b < kVBase + kVCount) {
        return kSBase + (static_cast<int>(a - kLBase) * kVCount + static_cast<int>(b - kVBase)) * kTCount;
    }
    if (a >= kSBase && a < kSBase + kSCount && (a - kSBase) % kTCount == 0 && b > kTBase &&
        b < kTBase + kTCount) {
        return a + (b - kTBase);
    }
    const ComposeEntry* begin = kCompose;
    const ComposeEntry* end = kCompose + kComposeSize;
    auto it = std::lower_bound(begin, end, std::pair<char32_t, char32_t>{a, b},
                               [](const ComposeEntry& e, const std::pair<char32_t, char32_t>& key) {
                                   return e.first != key.first ? e.first < key.first
                                                               : e.second < key.second;
                               });
    if (it != end && it->first == a && it->second == b) return it->composed;
    return 0;
}

void decompose_cp(char32_t cp, std::u32string& out) {
    if (cp >= kSBase && cp < kSBase + kSCount) {
        int idx = static_cast<int>(cp - kSBase);
        out.push_back(kLBase + idx / kNCount);
        out.push_back(kVBase + (idx % kNCount) / kTCount);
        int t = idx % kTCount;
        if (t > 0) out.push_back(kTBase + t);
        return;
    }
    if (const DecompEntry* e = find_decomp(cp)) {
        for (unsigned i = 0; i < e->len; ++i) out.push_back(kDecompData[e->offset + i]);
        return;
    }
    out.push_back(cp);
}

void canonical_order(std::u32string& s) {
    // Stable insertion sort of combining-mark runs by combining class.
    for (std::size_t i = 1; i < s.size(); ++i) {
        unsigned char cc = combining_class(s[i]);
        if (cc == 0) continue;
        std::size_t j = i;
        while (j > 0 && combining_class(s[j - 1]) > cc) {
            std::swap(s[j - 1], s[j]);
            --j;
        }
    }
}

bool in_ranges(const CpRange* ranges, std::size_t n, char32_t cp) {
    auto it = std::upper_bound(ranges, ranges + n, cp,
                               [](char32_t c, const CpRange& r) { return c < r.lo; });
    return it != ranges && cp <= (it - 1)->hi;
}

}  // namespace

std::u32string decode_utf8(std::string_view text) {
    std::u32string out;
    out.reserve(text.size());
    std::size_t i = 0;
    const auto* bytes = reinterpret_cast<const unsigned char*>(text.data());
    while (i < text.size()) {
        unsigned char b0 = bytes[i];
        if (b0 < 0x80) {
            out.push_back(b0);
            ++i;
            continue;
        }
        std::size_t len;
        char32_t cp;
        char32_t min_cp;
        if ((b0 & 0xE0) == 0xC0) {
            len = 2;
            cp = b0 & 0x1F;
            min_cp = 0x80;
        } else if ((b0 & 0xF0) == 0xE0) {
            len = 3;
            cp = b0 & 0x0F;
            min_cp = 0x800;
        } else if ((b0 & 0xF8) == 0xF0) {
            len = 4;
            cp = b0 & 0x07;
            min_cp = 0x10000;
        } else {
            throw DecodeError(i, "invalid leading byte");
        }
        if (i + len > text.size()) throw DecodeError(i, "truncated sequence");
        for (std::size_t k = 1; k < len; ++k) {
            unsigned char bk = bytes[i + k];
            if ((bk & 0xC0) != 0x80) throw DecodeError(i + k, "invalid continuation byte");
            cp = (cp << 6) | (bk & 0x3F);
        }
        if (cp < min_cp) throw DecodeError(i, "overlong encoding");
        if (cp >= 0xD800 && cp <= 0xDFFF) throw DecodeError(i, "surrogate codepoint");
        if (cp > 0x10FFFF) throw DecodeError(i, "codepoint out of range");
        out.push_back(cp);
        i += len;
    }
    return out;
}

std::string encode_utf8(std::u32string_view codepoints) {
    std::string out;
    out.reserve(codepoints.size());
    for (char32_t cp : codepoints) {
        if (cp < 0x80) {
            out.push_back(static_cast<char>(cp));
        } else if (cp < 0x800) {
            out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else if (cp < 0x10000) {
            out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else {
            out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        }
    }
    return out;
}

unsigned char combining_class(char32_t cp) {
    const CccEntry* begin = kCcc;
    const CccEntry* end = kCcc + kCccSize;
    auto it = std::lower_bound(begin, end, cp,
                               [](const CccEntry& e, char32_t c) { return e.cp < c; });
    return (it != end && it->cp == cp) ? it->ccc : 0;
}

std::u32string to_nfc(std::u32string_view codepoints) {
    std::u32string d;
    d.reserve(codepoints.size());
    for (char32_t cp : codepoints) decompose_cp(cp, d);
    canonical_order(d);

    // Canonical composition (UAX #15): compose each character with the last
    // starter unless a character in between blocks it.
    std::u32string out;
    out.reserve(d.size());
    std::ptrdiff_t last_starter = -1;
    for (char32_t c : d) {
        unsigned char cc = combining_class(c);
        if (last_starter >= 0) {
            bool blocked = static_cast<std::ptrdiff_t>(out.size()) - 1 > last_starter &&
                           combining_class(out.back()) >= cc;
            if (!blocked) {
                if (char32_t composed = compose_pair(out[last_starter], c)) {
                    out[last_starter] = composed;
                    continue;
                }
            }
        }
        if (cc == 0) last_starter = static_cast<std::ptrdiff_t>(out.size());
        out.push_back(c);
    }
    return out;
}

std::string nfc_utf8(std::string_view text) { return encode_utf8(to_nfc(decode_utf8(text))); }

char32_t to_lower(char32_t cp) {
    const LowerEntry* begin = kLower;
    const LowerEntry* end = kLower + kLowerSize;
    auto it = std::lower_bound(begin, end, cp,
                               [](const LowerEntry& e, char32_t c) { return e.cp < c; });
    return (it != end && it->cp == cp) ? it->lower : cp;
}

std::u32string to_lower(std::u32string_view codepoints) {
    std::u32string out(codepoints);
    for (char32_t& cp : out) cp = to_lower(cp);
    return out;
}

bool is_punct_or_symbol(char32_t cp) { return in_ranges(kPunctSymbol, kPunctSymbolSize, cp); }

bool is_space(char32_t cp) { return in_ranges(kSpace, kSpaceSize, cp); }

}  // namespace legalir::uni
