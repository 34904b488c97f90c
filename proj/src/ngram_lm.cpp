#include "legalir/ngram_lm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "legalir/errors.hpp"
#include "parallel.hpp"

namespace legalir {

namespace {
constexpr std::uint32_t kUnkId = 0;
constexpr std::uint32_t kBosId = 1;
constexpr std::uint32_t kEosId = 2;
}  // namespace

NGramLm::ContextKey NGramLm::pack(const TokenId* ids, std::size_t count) {
    ContextKey key(count * sizeof(TokenId), '\0');
    if (count > 0) std::memcpy(key.data(), ids, count * sizeof(TokenId));
    return key;
}

NGramLm::TokenId NGramLm::id_or_unk(const std::string& token) const {
    auto it = token_ids_.find(token);
    return it == token_ids_.end() ? kUnkId : it->second;
}

void NGramLm::index_event(const TokenId* context, std::size_t len, TokenId word,
                          std::uint64_t count) {
    // Lower-order counts are marginals of the same events.
    for (std::size_t m = 0; m <= len; ++m) {
        ContextCounts& cc = counts_[m][pack(context + (len - m), m)];
        cc.total += count;
        cc.words[word] += count;
    }
}

NGramLm NGramLm::train(const std::vector<TokenSeq>& sentences, NGramLmConfig cfg) {
    if (sentences.empty()) throw Error("ngram_lm: cannot train on an empty corpus");
    if (cfg.order < 1) throw Error("ngram_lm: order must be >= 1");
    if (!(cfg.discount > 0.0 && cfg.discount < 1.0)) {
        throw Error("ngram_lm: discount must be in (0, 1)");
    }

    NGramLm lm;
    lm.cfg_ = cfg;
    lm.vocab_ = {kUnk, kBos, kEos};
    lm.token_ids_ = {{kUnk, kUnkId}, {kBos, kBosId}, {kEos, kEosId}};
    lm.counts_.resize(cfg.order);

    // Vocabulary: tokens at or above the unk threshold, in first-seen order.
    std::unordered_map<std::string, std::uint64_t> freq;
    std::vector<std::string> seen_order;
    for (const TokenSeq& s : sentences) {
        for (const auto& t : s.tokens) {
            if (freq[t]++ == 0) seen_order.push_back(t);
        }
    }
    for (const auto& t : seen_order) {
        if (freq[t] >= cfg.unk_threshold) {
            lm.token_ids_.emplace(t, static_cast<TokenId>(lm.vocab_.size()));
            lm.vocab_.push_back(t);
        }
    }

    std::size_t ctx_len = cfg.order - 1;
    for (const TokenSeq& s : sentences) {
        std::vector<TokenId> padded(ctx_len, kBosId);
        padded.reserve(ctx_len + s.size() + 1);
        for (const auto& t : s.tokens) padded.push_back(lm.id_or_unk(t));
        padded.push_back(kEosId);
        for (std::size_t j = ctx_len; j < padded.size(); ++j) {
            lm.index_event(padded.data() + (j - ctx_len), ctx_len, padded[j], 1);
        }
    }
    return lm;
}

double NGramLm::base_unigram(TokenId word) const {
    const auto& root = counts_[0].at(ContextKey());
    std::uint64_t c = 0;
    if (auto it = root.words.find(word); it != root.words.end()) c = it->second;
    return (static_cast<double>(c) + 1.0) /
           (static_cast<double>(root.total) + static_cast<double>(vocab_.size()));
}

double NGramLm::prob_ids(const TokenId* context, std::size_t len, TokenId word) const {
    if (len == 0) return base_unigram(word);

    auto it = counts_[len].find(pack(context, len));
    if (it == counts_[len].end()) return prob_ids(context + 1, len - 1, word);

    const ContextCounts& cc = it->second;
    double total = static_cast<double>(cc.total);
    std::uint64_t c = 0;
    if (auto w = cc.words.find(word); w != cc.words.end()) c = w->second;
    double discounted = std::max(static_cast<double>(c) - cfg_.discount, 0.0) / total;
    double lambda = cfg_.discount * static_cast<double>(cc.words.size()) / total;
    return discounted + lambda * prob_ids(context + 1, len - 1, word);
}

double NGramLm::conditional(const std::vector<std::string>& context, const std::string& word) const {
    if (context.size() >= cfg_.order) {
        throw Error("ngram_lm: conditional context must be shorter than the model order");
    }
    std::vector<TokenId> ids;
    ids.reserve(context.size());
    for (const auto& t : context) ids.push_back(id_or_unk(t));
    return prob_ids(ids.data(), ids.size(), id_or_unk(word));
}

double NGramLm::prob(const std::vector<std::string>& history, const std::string& word) const {
    std::size_t ctx_len = cfg_.order - 1;
    std::vector<TokenId> ids(ctx_len, kBosId);
    std::size_t take = std::min(history.size(), ctx_len);
    for (std::size_t i = 0; i < take; ++i) {
        ids[ctx_len - take + i] = id_or_unk(history[history.size() - take + i]);
    }
    return prob_ids(ids.data(), ids.size(), id_or_unk(word));
}

double NGramLm::log_prob(const std::vector<std::string>& history, const std::string& word) const {
    return std::log(prob(history, word));
}

double NGramLm::sentence_log_prob(const TokenSeq& sentence) const {
    std::size_t ctx_len = cfg_.order - 1;
    std::vector<TokenId> padded(ctx_len, kBosId);
    padded.reserve(ctx_len + sentence.size() + 1);
    for (const auto& t : sentence.tokens) padded.push_back(id_or_unk(t));
    padded.push_back(kEosId);

    double sum = 0.0;
    for (std::size_t j = ctx_len; j < padded.size(); ++j) {
        sum += std::log(prob_ids(padded.data() + (j - ctx_len), ctx_len, padded[j]));
    }
    return sum;
}

double NGramLm::perplexity(const TokenSeq& sentence) const {
    double n = static_cast<double>(sentence.size() + 1);  // + end sentinel
    return std::exp(-sentence_log_prob(sentence) / n);
}

std::vector<std::vector<std::string>> NGramLm::observed_contexts() const {
    std::vector<std::vector<std::string>> out;
    for (std::size_t m = 0; m < counts_.size(); ++m) {
        for (const auto& [key, cc] : counts_[m]) {
            std::vector<std::string> ctx;
            for (std::size_t i = 0; i < m; ++i) {
                TokenId id;
                std::memcpy(&id, key.data() + i * sizeof(TokenId), sizeof(TokenId));
                ctx.push_back(vocab_[id]);
            }
            out.push_back(std::move(ctx));
        }
    }
    return out;
}

void NGramLm::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("ngram_lm: cannot write " + path.string());
    out << "legalir-nglm 1\n";
    out << "order " << cfg_.order << "\n";
    out << "discount " << cfg_.discount << "\n";
    out << "unk_threshold " << cfg_.unk_threshold << "\n";
    out << "vocab " << vocab_.size() << "\n";
    for (const auto& t : vocab_) out << t << "\n";

    // Only top-order events are stored; lower orders are marginals.
    const auto& top = counts_[cfg_.order - 1];
    std::vector<std::pair<ContextKey, const ContextCounts*>> ordered;
    ordered.reserve(top.size());
    for (const auto& [key, cc] : top) ordered.emplace_back(key, &cc);
    std::sort(ordered.begin(), ordered.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    std::size_t rows = 0;
    for (const auto& [key, cc] : ordered) rows += cc->words.size();
    out << "events " << rows << "\n";
    std::size_t ctx_len = cfg_.order - 1;
    for (const auto& [key, cc] : ordered) {
        std::vector<std::pair<TokenId, std::uint64_t>> words(cc->words.begin(), cc->words.end());
        std::sort(words.begin(), words.end());
        for (const auto& [word, count] : words) {
            for (std::size_t i = 0; i < ctx_len; ++i) {
                TokenId id;
                std::memcpy(&id, key.data() + i * sizeof(TokenId), sizeof(TokenId));
                out << id << " ";
            }
            out << word << " " << count << "\n";
        }
    }
    out << "end\n";
    if (!out) throw Error("ngram_lm: failed writing " + path.string());
}

NGramLm NGramLm::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("ngram_lm: cannot open " + path.string());

    auto fail = [&](const std::string& detail) -> Error {
        return Error("ngram_lm: malformed model file " + path.string() + ": " + detail);
    };

    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "legalir-nglm" || version != 1) {
        throw fail("expected 'legalir-nglm 1' header");
    }

    NGramLm lm;
    std::string key;
    std::size_t vocab_size = 0;
    if (!(in >> key >> lm.cfg_.order) || key != "order" || lm.cfg_.order < 1) throw fail("order");
    if (!(in >> key >> lm.cfg_.discount) || key != "discount") throw fail("discount");
    if (!(in >> key >> lm.cfg_.unk_threshold) || key != "unk_threshold") throw fail("unk_threshold");
    if (!(in >> key >> vocab_size) || key != "vocab" || vocab_size < 3) throw fail("vocab");

    lm.vocab_.reserve(vocab_size);
    std::string line;
    std::getline(in, line);  // finish the vocab header line
    for (std::size_t i = 0; i < vocab_size; ++i) {
        if (!std::getline(in, line) || line.empty()) throw fail("vocab entry " + std::to_string(i));
        lm.token_ids_.emplace(line, static_cast<TokenId>(lm.vocab_.size()));
        lm.vocab_.push_back(line);
    }
    if (lm.vocab_[kUnkId] != kUnk || lm.vocab_[kBosId] != kBos || lm.vocab_[kEosId] != kEos) {
        throw fail("sentinel tokens out of place");
    }

    std::size_t rows = 0;
    if (!(in >> key >> rows) || key != "events" || rows == 0) throw fail("events header");
    lm.counts_.resize(lm.cfg_.order);
    std::size_t ctx_len = lm.cfg_.order - 1;
    std::vector<TokenId> context(ctx_len);
    for (std::size_t r = 0; r < rows; ++r) {
        TokenId word = 0;
        std::uint64_t count = 0;
        for (std::size_t i = 0; i < ctx_len; ++i) {
            if (!(in >> context[i])) throw fail("event row " + std::to_string(r));
        }
        if (!(in >> word >> count)) throw fail("event row " + std::to_string(r));
        if (word >= lm.vocab_.size()) throw fail("event row " + std::to_string(r) + ": bad token id");
        lm.index_event(context.data(), ctx_len, word, count);
    }
    if (!(in >> key) || key != "end") throw fail("missing trailer");
    return lm;
}

std::vector<ScoredSentence> select_indomain(const NGramLm& lm, const std::vector<TokenSeq>& sentences,
                                            const SelectionConfig& cfg) {
    std::vector<ScoredSentence> out;
    for (const TokenSeq& s : sentences) {
        double pp = lm.perplexity(s);
        if (pp > cfg.threshold) continue;
        if (cfg.min_threshold && pp < *cfg.min_threshold) continue;
        std::string text;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (i > 0) text.push_back(' ');
            text += s.tokens[i];
        }
        out.push_back({std::move(text), pp});
    }
    return out;
}

std::vector<ScoredSentence> filter_scored(const std::vector<ScoredSentence>& rows,
                                          const SelectionConfig& cfg) {
    std::vector<ScoredSentence> out;
    for (const ScoredSentence& r : rows) {
        if (r.perplexity > cfg.threshold) continue;
        if (cfg.min_threshold && r.perplexity < *cfg.min_threshold) continue;
        out.push_back(r);
    }
    return out;
}

std::pair<std::size_t, std::size_t> select_indomain_stream(const NGramLm& lm, std::istream& in,
                                                           std::ostream& out,
                                                           const SelectionConfig& cfg,
                                                           const TextPipeline& pipeline,
                                                           unsigned workers) {
    constexpr std::size_t kChunk = 4096;  // lines scored per batch; bounds memory
    std::size_t read = 0;
    std::size_t kept = 0;
    std::vector<std::string> lines;
    std::vector<double> scores;

    auto flush = [&]() {
        scores.assign(lines.size(), 0.0);
        parallel_for(lines.size(), workers, [&](std::size_t i) {
            scores[i] = lm.perplexity(pipeline.tokens(lines[i]));
        });
        for (std::size_t i = 0; i < lines.size(); ++i) {
            bool keep = scores[i] <= cfg.threshold &&
                        (!cfg.min_threshold || scores[i] >= *cfg.min_threshold);
            if (keep) {
                out << scores[i] << "\t" << lines[i] << "\n";
                ++kept;
            }
        }
        lines.clear();
    };

    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ++read;
        lines.push_back(line);
        if (lines.size() >= kChunk) flush();
    }
    flush();
    return {read, kept};
}

}  // namespace legalir
