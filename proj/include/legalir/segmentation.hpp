#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "legalir/text_normalize.hpp"

namespace legalir {

struct SegmentationConfig {
    std::size_t window = 200;  // tokens
    std::size_t stride = 100;  // tokens, 1 <= stride <= window

    void validate() const;
};

/// Windowed slice of an article; the unit presented to a pair scorer.
struct Passage {
    std::string article_key;    // provenance, "<law_id>\x1f<article_id>" or caller-defined
    std::size_t passage_index = 0;
    std::size_t token_offset = 0;
    TokenSeq tokens;

    std::string text() const;  // tokens joined with single spaces
};

/// Passage i starts at i*stride with length min(window, remaining); generation
/// stops after the first passage that reaches the article end, so every token
/// is covered and the final passage ends exactly at the article end.
std::vector<Passage> segment(const TokenSeq& article_tokens, const SegmentationConfig& cfg,
                             const std::string& article_key = {});

/// The passage maximizing BM25 of the question against a mini-index built
/// over exactly these passages; ties resolve to the lowest passage_index.
/// Throws on an empty passage list.
const Passage& representative_passage(const TokenSeq& question, const std::vector<Passage>& passages);

}  // namespace legalir
