#pragma once

#include <cstddef>

namespace legalir::uni {

struct DecompEntry {
    char32_t cp;
    unsigned offset;  // into kDecompData
    unsigned len;
};

struct CccEntry {
    char32_t cp;
    unsigned char ccc;
};

struct ComposeEntry {
    char32_t first;
    char32_t second;
    char32_t composed;
};

struct LowerEntry {
    char32_t cp;
    char32_t lower;
};

struct CpRange {
    char32_t lo;
    char32_t hi;  // inclusive
};

extern const DecompEntry kDecompIndex[];
extern const std::size_t kDecompIndexSize;
extern const char32_t kDecompData[];

extern const CccEntry kCcc[];
extern const std::size_t kCccSize;

extern const ComposeEntry kCompose[];
extern const std::size_t kComposeSize;

extern const LowerEntry kLower[];
extern const std::size_t kLowerSize;

extern const CpRange kPunctSymbol[];
extern const std::size_t kPunctSymbolSize;

extern const CpRange kSpace[];
extern const std::size_t kSpaceSize;

}  // namespace legalir::uni
