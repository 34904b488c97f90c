#include "legalir/segmentation.hpp"

#include <algorithm>

#include "legalir/bm25.hpp"
#include "legalir/errors.hpp"

namespace legalir {

void SegmentationConfig::validate() const {
    if (window < 1) throw Error("segmentation: window must be >= 1");
    if (stride < 1 || stride > window) {
        throw Error("segmentation: stride must satisfy 1 <= stride <= window");
    }
}

std::string Passage::text() const {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) out.push_back(' ');
        out += tokens.tokens[i];
    }
    return out;
}

std::vector<Passage> segment(const TokenSeq& article_tokens, const SegmentationConfig& cfg,
                             const std::string& article_key) {
    cfg.validate();
    std::vector<Passage> passages;
    std::size_t len = article_tokens.size();
    if (len == 0) return passages;

    std::size_t offset = 0;
    std::size_t index = 0;
    while (true) {
        std::size_t count = std::min(cfg.window, len - offset);
        Passage p;
        p.article_key = article_key;
        p.passage_index = index;
        p.token_offset = offset;
        p.tokens = article_tokens.slice(offset, count);
        passages.push_back(std::move(p));
        if (offset + count >= len) break;  // first passage reaching the end is the last
        offset += cfg.stride;
        ++index;
    }
    return passages;
}

const Passage& representative_passage(const TokenSeq& question, const std::vector<Passage>& passages) {
    if (passages.empty()) throw Error("representative_passage: empty passage list");
    if (passages.size() == 1) return passages.front();

    // Mini-index with each passage as its own document; df/avgdl are local.
    std::vector<std::pair<std::string, TokenSeq>> docs;
    docs.reserve(passages.size());
    for (const Passage& p : passages) docs.emplace_back(std::to_string(p.passage_index), p.tokens);
    Bm25Index index = Bm25Index::build(docs);

    const Passage* best = nullptr;
    double best_score = 0.0;
    for (const Passage& p : passages) {
        double s = index.score(question, std::to_string(p.passage_index));
        if (best == nullptr || s > best_score ||
            (s == best_score && p.passage_index < best->passage_index)) {
            best = &p;
            best_score = s;
        }
    }
    return *best;
}

}  // namespace legalir
