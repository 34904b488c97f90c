#pragma once

#include <string>
#include <string_view>

namespace legalir::uni {

/// Decodes strict UTF-8. Throws DecodeError with the byte offset of the first
/// invalid sequence (overlong encodings, surrogates and out-of-range
/// codepoints are rejected).
std::u32string decode_utf8(std::string_view text);

std::string encode_utf8(std::u32string_view codepoints);

/// Canonical composition (NFC), including algorithmic Hangul composition.
std::u32string to_nfc(std::u32string_view codepoints);

/// Convenience: decode, compose, encode.
std::string nfc_utf8(std::string_view text);

/// Simple (one-to-one) lowercase mapping.
char32_t to_lower(char32_t cp);
std::u32string to_lower(std::u32string_view codepoints);

/// General category P* or S*.
bool is_punct_or_symbol(char32_t cp);

/// Unicode whitespace: Z* plus the usual control whitespace.
bool is_space(char32_t cp);

unsigned char combining_class(char32_t cp);

}  // namespace legalir::uni
