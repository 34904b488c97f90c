#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "legalir/text_normalize.hpp"

namespace legalir {

struct NGramLmConfig {
    std::size_t order = 3;            // n >= 1
    double discount = 0.75;           // in (0, 1)
    std::uint32_t unk_threshold = 2;  // min training frequency for vocab membership
};

/// Interpolated absolute-discounting n-gram model.
///
///   p(w|c) = max(count(c,w) - d, 0)/count(c) + lambda(c) * p(w|backoff(c))
///   lambda(c) = d * |{w : count(c,w) > 0}| / count(c)
///
/// with an add-one-smoothed unigram as the base case, so every conditional
/// distribution sums to 1 over the vocabulary and every probability is
/// strictly positive. Sentences are padded with n-1 start sentinels and one
/// end sentinel; tokens below unk_threshold train as the unknown token.
class NGramLm {
public:
    using TokenId = std::uint32_t;

    static constexpr const char* kUnk = "<unk>";
    static constexpr const char* kBos = "<s>";
    static constexpr const char* kEos = "</s>";

    static NGramLm train(const std::vector<TokenSeq>& sentences, NGramLmConfig cfg = {});

    /// Conditional p(w|c) evaluated at the order of the given context
    /// (|context| < order); sums to 1 over the vocabulary. OOV maps to <unk>.
    double conditional(const std::vector<std::string>& context, const std::string& word) const;

    /// Next-word probability given a sentence history: the last order-1
    /// history tokens, left-padded with <s> when the history is short.
    double prob(const std::vector<std::string>& history, const std::string& word) const;
    double log_prob(const std::vector<std::string>& history, const std::string& word) const;

    /// Sum of natural-log probabilities over all scored positions,
    /// including the end sentinel.
    double sentence_log_prob(const TokenSeq& sentence) const;

    /// exp(-(1/N) * sum ln p), N = token count + 1 for the end sentinel.
    double perplexity(const TokenSeq& sentence) const;

    const NGramLmConfig& config() const { return cfg_; }
    std::size_t vocab_size() const { return vocab_.size(); }
    bool in_vocab(const std::string& token) const { return token_ids_.count(token) > 0; }
    const std::vector<std::string>& vocab() const { return vocab_; }

    /// Every observed context at every order, as token strings.
    std::vector<std::vector<std::string>> observed_contexts() const;

    void save(const std::filesystem::path& path) const;
    static NGramLm load(const std::filesystem::path& path);

private:
    using ContextKey = std::string;  // packed little-endian token ids

    static ContextKey pack(const TokenId* ids, std::size_t count);

    struct ContextCounts {
        std::uint64_t total = 0;
        std::unordered_map<TokenId, std::uint64_t> words;
    };

    TokenId id_or_unk(const std::string& token) const;
    double prob_ids(const TokenId* context, std::size_t len, TokenId word) const;
    double base_unigram(TokenId word) const;
    void index_event(const TokenId* context, std::size_t len, TokenId word, std::uint64_t count);

    NGramLmConfig cfg_;
    std::vector<std::string> vocab_;  // id -> token; ids 0,1,2 are unk/bos/eos
    std::unordered_map<std::string, TokenId> token_ids_;
    // counts_[m]: contexts of length m, m in [0, order-1]
    std::vector<std::unordered_map<ContextKey, ContextCounts>> counts_;
};

struct SelectionConfig {
    double threshold = 0.0;               // keep PP <= threshold
    std::optional<double> min_threshold;  // optional two-sided band: also require PP >= min
};

struct ScoredSentence {
    std::string sentence;
    double perplexity = 0.0;
};

/// Scores each sentence and keeps those within the threshold, input order
/// preserved. The text of each kept sentence is its tokens joined by spaces.
std::vector<ScoredSentence> select_indomain(const NGramLm& lm, const std::vector<TokenSeq>& sentences,
                                            const SelectionConfig& cfg);

/// Pure filter over pre-scored rows; select_indomain composed with scoring.
std::vector<ScoredSentence> filter_scored(const std::vector<ScoredSentence>& rows,
                                          const SelectionConfig& cfg);

/// Streaming selection: reads one sentence per line, tokenizes via the
/// pipeline, writes "score<TAB>sentence" for kept lines. Returns
/// (lines_read, lines_kept). Bounded memory regardless of corpus size.
std::pair<std::size_t, std::size_t> select_indomain_stream(const NGramLm& lm, std::istream& in,
                                                           std::ostream& out,
                                                           const SelectionConfig& cfg,
                                                           const TextPipeline& pipeline,
                                                           unsigned workers = 1);

}  // namespace legalir
