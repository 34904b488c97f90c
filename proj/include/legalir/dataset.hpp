#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "legalir/bm25.hpp"
#include "legalir/segmentation.hpp"
#include "legalir/text_normalize.hpp"

namespace legalir {

/// (law_id, article_id) reference; ordered so sets and tie-breaks are stable.
using ArticleRef = std::pair<std::string, std::string>;

struct Article {
    std::string law_id;
    std::string article_id;
    std::string text;

    ArticleRef ref() const { return {law_id, article_id}; }
};

struct Question {
    std::string question_id;
    std::string text;
    std::set<ArticleRef> relevant;
    std::optional<std::string> answer;
};

struct TrainingPair {
    std::string question_id;
    std::string law_id;
    std::string article_id;
    std::size_t passage_index = 0;
    std::string passage_text;
    int label = 0;  // 1 iff (law_id, article_id) is in the question's relevant set
};

/// Corpus file: JSON array of laws {"id", "articles": [{"id", "text"}]}.
/// Malformed records raise errors naming the record index and field.
std::vector<Article> load_corpus(const std::filesystem::path& path);

/// Questions file: JSON array of {"question_id", "text", "relevant_articles":
/// [{"law_id", "article_id"}], optional "answer"}. When a corpus is given,
/// dangling relevant references raise an error listing every offender.
std::vector<Question> load_questions(const std::filesystem::path& path,
                                     const std::vector<Article>* corpus = nullptr);

void save_pairs_jsonl(const std::vector<TrainingPair>& pairs, const std::filesystem::path& path);
std::vector<TrainingPair> load_pairs_jsonl(const std::filesystem::path& path);

/// Article text run through the shared pipeline, plus its composite index key.
struct TokenizedArticle {
    std::string law_id;
    std::string article_id;
    TokenSeq tokens;
};

struct TokenizedQuestion {
    std::string question_id;
    std::string text;
    TokenSeq tokens;
    std::set<ArticleRef> relevant;
};

// Composite doc id used for article-level BM25 indexes. The separator is
// U+001F (unit separator), rejected in ids at load time.
std::string article_doc_id(const std::string& law_id, const std::string& article_id);
ArticleRef parse_article_doc_id(const std::string& doc_id);

std::vector<TokenizedArticle> tokenize_corpus(const std::vector<Article>& corpus,
                                              const TextPipeline& pipeline);
std::vector<TokenizedQuestion> tokenize_questions(const std::vector<Question>& questions,
                                                  const TextPipeline& pipeline);

/// Article-level index over tokenized articles, doc ids per article_doc_id().
Bm25Index build_article_index(const std::vector<TokenizedArticle>& articles,
                              Bm25Params params = {});

struct PairGenConfig {
    std::size_t top_k = 150;
    std::size_t max_question_tokens = 128;
    SegmentationConfig segmentation;
};

/// Per question: skipped entirely when longer than max_question_tokens;
/// positives are all gold articles (retrieved or not), negatives are the
/// top-k retrieval minus gold. Each pair carries the article's
/// representative passage for the question.
std::vector<TrainingPair> generate_pairs(const std::vector<TokenizedQuestion>& questions,
                                         const std::vector<TokenizedArticle>& corpus,
                                         const Bm25Index& index, const PairGenConfig& cfg,
                                         unsigned workers = 1);

/// Question-level split: all pairs of one question land on one side;
/// |dev questions| = round(fraction * |questions|). Deterministic under seed.
/// Throws when fewer than 2 distinct questions are present.
std::pair<std::vector<TrainingPair>, std::vector<TrainingPair>> split_dev(
    const std::vector<TrainingPair>& pairs, double fraction, std::uint64_t seed);

/// Drops records whose answer exceeds max_answer_words whitespace-words or
/// matches the article-id-list pattern ("Điều <n>" items separated by , or ;).
/// Missing answers are treated as empty text.
std::vector<Question> filter_qa(const std::vector<Question>& records,
                                std::size_t max_answer_words = 50);

bool answer_is_article_id_list(const std::string& answer);

}  // namespace legalir
