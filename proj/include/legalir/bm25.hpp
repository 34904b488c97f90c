#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "legalir/text_normalize.hpp"

namespace legalir {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct ScoredHit {
    std::string doc_id;
    double score = 0.0;
};

/// Immutable inverted-index BM25 scorer. idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)),
/// so idf > 0 for every df in [1, N] and no document ever scores negative.
/// Hit lists are sorted by score descending, ties broken by ascending doc_id.
class Bm25Index {
public:
    /// Throws on empty corpus, duplicate doc ids or invalid params.
    static Bm25Index build(const std::vector<std::pair<std::string, TokenSeq>>& docs,
                           Bm25Params params = {});

    /// Throws if doc_id is unknown. Repeated query terms count with multiplicity.
    double score(const TokenSeq& query, const std::string& doc_id) const;

    /// Up to k hits with strictly positive score.
    std::vector<ScoredHit> top_k(const TokenSeq& query, std::size_t k) const;

    std::size_t doc_count() const { return doc_ids_.size(); }
    double avg_doc_len() const { return avg_doc_len_; }
    const Bm25Params& params() const { return params_; }
    bool contains(const std::string& doc_id) const { return id_lookup_.count(doc_id) > 0; }
    const std::vector<std::string>& doc_ids() const { return doc_ids_; }

    void save(const std::filesystem::path& path) const;
    static Bm25Index load(const std::filesystem::path& path);

private:
    struct Posting {
        std::uint32_t doc;
        std::uint32_t tf;
    };

    double term_score(std::uint32_t tf, std::uint32_t doc_len, std::size_t df) const;

    Bm25Params params_;
    std::vector<std::string> doc_ids_;
    std::vector<std::uint32_t> doc_len_;
    std::unordered_map<std::string, std::uint32_t> id_lookup_;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    double avg_doc_len_ = 0.0;
};

}  // namespace legalir
