#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace legalir {

/// Replacement table applied longest-key-first during normalization.
/// Keys and values are stored NFC-composed.
using ReplacementMap = std::vector<std::pair<std::string, std::string>>;

struct NormalizationConfig {
    bool lowercase = true;
    bool strip_punctuation = true;
    bool remove_stopwords = false;
    std::unordered_set<std::string> stopword_list;
    ReplacementMap accent_map;        // mistyped -> canonical accent placement
    ReplacementMap abbreviation_map;  // abbreviation -> full form
    std::string unicode_form = "NFC";
};

/// Token sequence with byte spans into the text it was produced from.
/// Spans are half-open [begin, end), non-overlapping and strictly increasing.
struct TokenSeq {
    std::vector<std::string> tokens;
    std::vector<std::pair<std::size_t, std::size_t>> spans;

    std::size_t size() const { return tokens.size(); }
    bool empty() const { return tokens.empty(); }

    void push(std::string token, std::size_t begin, std::size_t end) {
        tokens.push_back(std::move(token));
        spans.emplace_back(begin, end);
    }

    TokenSeq slice(std::size_t offset, std::size_t count) const;

    bool operator==(const TokenSeq& other) const = default;
};

/// Deterministic text cleanup: UTF-8 validation, canonical composition,
/// accent standardization, abbreviation expansion, then lowercase /
/// punctuation stripping / stopword filtering per flags, with whitespace
/// collapsed to single spaces. Idempotent for any config whose map values
/// are fixed points of the pipeline (the shipped data files are).
std::string normalize(std::string_view raw, const NormalizationConfig& cfg);

/// Multiword dictionary for compound joining; entries are syllable sequences.
class CompoundDict {
public:
    CompoundDict() = default;
    explicit CompoundDict(const std::vector<std::string>& entries);

    void add(const std::string& entry);  // syllables separated by spaces
    bool empty() const { return by_first_.empty(); }

    /// Longest entry (in syllables) matching tokens[pos..]; 0 if none.
    std::size_t longest_match(const std::vector<std::string>& syllables, std::size_t pos) const;

private:
    // first syllable -> entries sorted by length descending
    std::unordered_map<std::string, std::vector<std::vector<std::string>>> by_first_;
};

/// Whitespace-delimited syllables; maximal-length runs present in the
/// dictionary are joined into one token with underscores. Spans map back
/// into the input text.
TokenSeq tokenize(std::string_view normalized, const CompoundDict& compounds = {});

/// Order-preserving stopword filter.
TokenSeq remove_stopwords(const TokenSeq& seq, const std::unordered_set<std::string>& stopwords);

/// TokenSeq over pre-split tokens, spans synthesized as if space-joined.
TokenSeq make_token_seq(const std::vector<std::string>& tokens);

/// Normalization + tokenization bundle, the unit every ingestion path shares.
struct TextPipeline {
    NormalizationConfig normalization;
    CompoundDict compounds;

    TokenSeq tokens(std::string_view raw) const {
        return tokenize(normalize(raw, normalization), compounds);
    }
};

// Data-file loaders. All files are UTF-8, newline-delimited; map files are
// TAB-separated key/value per line. Blank lines are skipped.
std::unordered_set<std::string> load_word_list(const std::filesystem::path& path);
ReplacementMap load_replacement_map(const std::filesystem::path& path);
CompoundDict load_compound_dict(const std::filesystem::path& path);

}  // namespace legalir
