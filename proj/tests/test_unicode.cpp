#include <string>

#include "doctest.h"
#include "legalir/errors.hpp"
#include "legalir/unicode.hpp"

using namespace legalir;

TEST_CASE("utf8 decode accepts valid text and round-trips") {
    CHECK(uni::decode_utf8("").empty());
    CHECK(uni::decode_utf8("abc").size() == 3);
    std::string viet = "hội đồng xét xử";
    CHECK(uni::encode_utf8(uni::decode_utf8(viet)) == viet);
    std::string emoji = "a\xF0\x9F\x98\x80z";  // U+1F600
    auto cps = uni::decode_utf8(emoji);
    CHECK(cps.size() == 3);
    CHECK(cps[1] == 0x1F600);
}

TEST_CASE("utf8 decode rejects invalid input with the byte offset") {
    auto offset_of = [](const std::string& s) -> std::size_t {
        try {
            uni::decode_utf8(s);
        } catch (const DecodeError& e) {
            return e.byte_offset();
        }
        return static_cast<std::size_t>(-1);
    };

    CHECK_THROWS_AS(uni::decode_utf8(std::string("ab\xFF", 3)), DecodeError);
    CHECK(offset_of(std::string("ab\xFF", 3)) == 2);
    CHECK(offset_of(std::string("\xC3", 1)) == 0);            // truncated two-byte sequence
    CHECK(offset_of(std::string("x\xC0\xAF", 3)) == 1);       // overlong '/'
    CHECK(offset_of(std::string("\xED\xA0\x80", 3)) == 0);    // surrogate D800
    CHECK(offset_of(std::string("\xF4\x90\x80\x80", 4)) == 0);  // beyond U+10FFFF
    CHECK(offset_of(std::string("a\xE1\x80") + "q") == 3);    // bad continuation
}

TEST_CASE("nfc matches frozen reference values") {
    // Expected strings computed with an independent Unicode implementation.
    CHECK(uni::nfc_utf8("ò") == "ò");              // ò
    CHECK(uni::nfc_utf8("ả") == "ả");              // ả
    CHECK(uni::nfc_utf8("ế") == "ế");        // ế
    CHECK(uni::nfc_utf8("ạ́") == "ạ́");  // ạ + acute stays decomposed
    CHECK(uni::nfc_utf8("ạ́") == "ạ́");  // canonical reordering first
    CHECK(uni::nfc_utf8("q̣̇") == "q̣̇"); // marks sorted by combining class
    CHECK(uni::nfc_utf8("Å") == "Å");               // angstrom singleton
    CHECK(uni::nfc_utf8("Ω") == "Ω");               // ohm singleton
    CHECK(uni::nfc_utf8("가") == "가");         // hangul LV
    CHECK(uni::nfc_utf8("각") == "각");   // hangul LVT
    CHECK(uni::nfc_utf8("oà") == "oà");            // oà (tone on the second letter)
    CHECK(uni::nfc_utf8("") == "");
}

TEST_CASE("nfc is idempotent on mixed content") {
    for (const std::string s :
         {std::string("hội đồng xét xử"), std::string("ạ́b̀"),
          std::string("각 text"), std::string("ậẫmånĝo  \t"),
          std::string("ÅΩİ")}) {
        std::string once = uni::nfc_utf8(s);
        CHECK(uni::nfc_utf8(once) == once);
    }
}

TEST_CASE("simple lowercase mapping") {
    CHECK(uni::to_lower(U'A') == U'a');
    CHECK(uni::to_lower(U'z') == U'z');
    CHECK(uni::to_lower(U'À') == U'à');  // À -> à
    CHECK(uni::to_lower(U'Đ') == U'đ');  // Đ -> đ
    CHECK(uni::to_lower(U'Ạ') == U'ạ');  // Ạ -> ạ
    CHECK(uni::to_lower(U'Σ') == U'σ');  // Σ -> σ
    CHECK(uni::to_lower(U'İ') == U'i');       // İ simple mapping
    CHECK(uni::to_lower(U'0') == U'0');
}

TEST_CASE("category queries") {
    for (char32_t cp : {U'.', U',', U'!', U'(', U'_', U'“', U'€', U'+', U'§'}) {
        CHECK(uni::is_punct_or_symbol(cp));
    }
    for (char32_t cp : {U'a', U'1', U' ', U'à', U'가'}) {
        CHECK_FALSE(uni::is_punct_or_symbol(cp));
    }
    for (char32_t cp : {U' ', U'\t', U'\n', U'\r', U' ', U' ', U'　'}) {
        CHECK(uni::is_space(cp));
    }
    for (char32_t cp : {U'a', U'.', U'à'}) {
        CHECK_FALSE(uni::is_space(cp));
    }
}
