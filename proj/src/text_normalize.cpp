#include "legalir/text_normalize.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "legalir/errors.hpp"
#include "legalir/unicode.hpp"

namespace legalir {

namespace {

/// Single left-to-right pass; at each position the longest matching key wins.
/// Replacement text is never rescanned.
std::string apply_replacements(const std::string& text, const ReplacementMap& map) {
    if (map.empty()) return text;
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        const std::pair<std::string, std::string>* best = nullptr;
        for (const auto& entry : map) {
            const std::string& key = entry.first;
            if (key.empty() || key.size() > text.size() - i) continue;
            if (best && key.size() <= best->first.size()) continue;
            if (text.compare(i, key.size(), key) == 0) best = &entry;
        }
        if (best) {
            out += best->second;
            i += best->first.size();
        } else {
            out.push_back(text[i]);
            ++i;
        }
    }
    return out;
}

std::string collapse_whitespace(const std::string& text) {
    std::u32string cps = uni::decode_utf8(text);
    std::u32string out;
    out.reserve(cps.size());
    bool pending_space = false;
    for (char32_t cp : cps) {
        if (uni::is_space(cp)) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out.push_back(U' ');
            pending_space = false;
            out.push_back(cp);
        }
    }
    return uni::encode_utf8(out);
}

std::string strip_punct(const std::string& text) {
    std::u32string cps = uni::decode_utf8(text);
    for (char32_t& cp : cps) {
        if (uni::is_punct_or_symbol(cp)) cp = U' ';
    }
    return uni::encode_utf8(cps);
}

std::string filter_words(const std::string& text, const std::unordered_set<std::string>& stopwords) {
    std::string out;
    std::size_t i = 0;
    while (i < text.size()) {
        std::size_t j = text.find(' ', i);
        if (j == std::string::npos) j = text.size();
        std::string word = text.substr(i, j - i);
        if (!word.empty() && stopwords.find(word) == stopwords.end()) {
            if (!out.empty()) out.push_back(' ');
            out += word;
        }
        i = j + 1;
    }
    return out;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t i = 0;
    while (i <= text.size()) {
        std::size_t j = text.find('\n', i);
        if (j == std::string::npos) {
            if (i < text.size()) lines.push_back(text.substr(i));
            break;
        }
        std::string line = text.substr(i, j - i);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
        i = j + 1;
    }
    return lines;
}

}  // namespace

std::string normalize(std::string_view raw, const NormalizationConfig& cfg) {
    if (cfg.unicode_form != "NFC") {
        throw Error("normalize: unsupported unicode_form '" + cfg.unicode_form + "' (only NFC)");
    }
    // Decode validates the encoding; everything after operates on known-good UTF-8.
    std::u32string cps = uni::decode_utf8(raw);
    std::string text = uni::encode_utf8(uni::to_nfc(cps));

    text = apply_replacements(text, cfg.accent_map);
    text = apply_replacements(text, cfg.abbreviation_map);
    if (cfg.lowercase) {
        text = uni::encode_utf8(uni::to_lower(uni::decode_utf8(text)));
        // Lowercasing can expose accent-map matches that were cased differently.
        text = apply_replacements(text, cfg.accent_map);
    }
    text = uni::nfc_utf8(text);
    if (cfg.strip_punctuation) text = strip_punct(text);
    text = collapse_whitespace(text);
    if (cfg.remove_stopwords) text = filter_words(text, cfg.stopword_list);
    return text;
}

TokenSeq TokenSeq::slice(std::size_t offset, std::size_t count) const {
    TokenSeq out;
    std::size_t end = std::min(offset + count, tokens.size());
    for (std::size_t i = offset; i < end; ++i) out.push(tokens[i], spans[i].first, spans[i].second);
    return out;
}

CompoundDict::CompoundDict(const std::vector<std::string>& entries) {
    for (const auto& e : entries) add(e);
}

void CompoundDict::add(const std::string& entry) {
    std::istringstream in(uni::nfc_utf8(entry));
    std::vector<std::string> syllables;
    std::string s;
    while (in >> s) syllables.push_back(s);
    if (syllables.empty()) return;
    auto& bucket = by_first_[syllables.front()];
    bucket.push_back(std::move(syllables));
    std::sort(bucket.begin(), bucket.end(), [](const auto& a, const auto& b) {
        return a.size() != b.size() ? a.size() > b.size() : a < b;
    });
}

std::size_t CompoundDict::longest_match(const std::vector<std::string>& syllables,
                                        std::size_t pos) const {
    auto it = by_first_.find(syllables[pos]);
    if (it == by_first_.end()) return 0;
    for (const auto& entry : it->second) {  // sorted longest first
        if (entry.size() > syllables.size() - pos) continue;
        bool match = true;
        for (std::size_t k = 1; k < entry.size(); ++k) {
            if (entry[k] != syllables[pos + k]) {
                match = false;
                break;
            }
        }
        if (match) return entry.size();
    }
    return 0;
}

TokenSeq tokenize(std::string_view normalized, const CompoundDict& compounds) {
    // Syllables are maximal non-whitespace runs, tracked with byte spans.
    std::vector<std::string> syllables;
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    std::u32string cps = uni::decode_utf8(normalized);

    std::size_t byte_pos = 0;
    std::size_t start = 0;
    std::string current;
    auto flush = [&]() {
        if (!current.empty()) {
            syllables.push_back(current);
            spans.emplace_back(start, byte_pos);
            current.clear();
        }
    };
    for (char32_t cp : cps) {
        std::string enc = uni::encode_utf8(std::u32string_view(&cp, 1));
        if (uni::is_space(cp)) {
            flush();
        } else {
            if (current.empty()) start = byte_pos;
            current += enc;
        }
        byte_pos += enc.size();
    }
    flush();

    TokenSeq out;
    std::size_t i = 0;
    while (i < syllables.size()) {
        std::size_t m = compounds.empty() ? 0 : compounds.longest_match(syllables, i);
        if (m < 2) {
            out.push(syllables[i], spans[i].first, spans[i].second);
            ++i;
            continue;
        }
        std::string joined = syllables[i];
        for (std::size_t k = 1; k < m; ++k) {
            joined.push_back('_');
            joined += syllables[i + k];
        }
        out.push(std::move(joined), spans[i].first, spans[i + m - 1].second);
        i += m;
    }
    return out;
}

TokenSeq make_token_seq(const std::vector<std::string>& tokens) {
    TokenSeq out;
    std::size_t pos = 0;
    for (const auto& t : tokens) {
        out.push(t, pos, pos + t.size());
        pos += t.size() + 1;
    }
    return out;
}

TokenSeq remove_stopwords(const TokenSeq& seq, const std::unordered_set<std::string>& stopwords) {
    TokenSeq out;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (stopwords.find(seq.tokens[i]) == stopwords.end()) {
            out.push(seq.tokens[i], seq.spans[i].first, seq.spans[i].second);
        }
    }
    return out;
}

std::unordered_set<std::string> load_word_list(const std::filesystem::path& path) {
    std::unordered_set<std::string> out;
    for (const auto& line : split_lines(read_text_file(path))) {
        if (line.empty()) continue;
        out.insert(uni::nfc_utf8(line));
    }
    return out;
}

ReplacementMap load_replacement_map(const std::filesystem::path& path) {
    ReplacementMap out;
    std::size_t line_no = 0;
    for (const auto& line : split_lines(read_text_file(path))) {
        ++line_no;
        if (line.empty()) continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) {
            throw Error(path.string() + ":" + std::to_string(line_no) +
                        ": expected TAB-separated key/value");
        }
        out.emplace_back(uni::nfc_utf8(line.substr(0, tab)), uni::nfc_utf8(line.substr(tab + 1)));
    }
    return out;
}

CompoundDict load_compound_dict(const std::filesystem::path& path) {
    CompoundDict dict;
    for (const auto& line : split_lines(read_text_file(path))) {
        if (!line.empty()) dict.add(line);
    }
    return dict;
}

}  // namespace legalir
