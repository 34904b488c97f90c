#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "legalir/bm25.hpp"
#include "legalir/dataset.hpp"
#include "legalir/segmentation.hpp"

namespace legalir {

struct ScoreRequest {
    std::string pair_id;
    std::string question_text;
    std::string passage_text;
};

struct ScoreResponse {
    std::string pair_id;
    double probability = 0.0;  // finite, clamped to [0,1]
};

/// Text-pair relevance scorer. Implementations must return exactly one
/// response per request, in request order, with matching pair_ids.
class Scorer {
public:
    virtual ~Scorer() = default;
    virtual std::string name() const = 0;
    virtual std::vector<ScoreResponse> score(const std::vector<ScoreRequest>& requests) = 0;
};

/// Fallback scorer: min-max-normalized BM25 of question vs passage within the
/// request batch; a batch with all-equal raw scores maps to 0.5 everywhere.
class BuiltinLexicalScorer : public Scorer {
public:
    explicit BuiltinLexicalScorer(Bm25Params params = {}) : params_(params) {}
    std::string name() const override { return "builtin-lexical"; }
    std::vector<ScoreResponse> score(const std::vector<ScoreRequest>& requests) override;

private:
    Bm25Params params_;
};

/// Child process speaking newline-delimited JSON over stdin/stdout.
/// On startup the child writes one handshake line declaring the protocol
/// version ({"protocol": "legalir-scorer/1", ...}); afterwards each request
/// line is answered by exactly one response line, order-preserving.
/// Crashes, timeouts and malformed lines abort with the offending pair_id.
class ExternalProcessScorer : public Scorer {
public:
    static constexpr const char* kProtocol = "legalir-scorer/1";

    explicit ExternalProcessScorer(std::string command, double timeout_seconds = 60.0);
    ~ExternalProcessScorer() override;

    ExternalProcessScorer(const ExternalProcessScorer&) = delete;
    ExternalProcessScorer& operator=(const ExternalProcessScorer&) = delete;

    std::string name() const override { return "external(" + command_ + ")"; }
    std::vector<ScoreResponse> score(const std::vector<ScoreRequest>& requests) override;

private:
    struct Process;
    void ensure_started();
    void shutdown() noexcept;

    std::string command_;
    double timeout_seconds_;
    std::unique_ptr<Process> proc_;
};

struct TopOnePolicy {};
struct ThresholdPolicy {
    double tau = 0.5;  // in [0,1]; empty result falls back to argmax
};
using SelectionPolicy = std::variant<TopOnePolicy, ThresholdPolicy>;

std::string policy_name(const SelectionPolicy& policy);

struct PipelineConfig {
    std::size_t k_retrieve = 150;
    SegmentationConfig segmentation;
    SelectionPolicy selection = TopOnePolicy{};
    double scorer_timeout_seconds = 60.0;

    void validate() const;
};

struct ScoredArticle {
    std::string law_id;
    std::string article_id;
    double probability = 0.0;
};

struct QuestionResult {
    std::string question_id;
    std::vector<ScoredArticle> ranked;  // probability desc, ties by (law_id, article_id) asc
};

struct RunProvenance {
    std::string scorer_name;
    std::size_t k_retrieve = 0;
    SegmentationConfig segmentation;
    std::string selection;
};

struct RunResult {
    RunProvenance provenance;
    SelectionPolicy policy;
    std::vector<QuestionResult> questions;
};

/// Maximum passage probability represents the whole article.
/// Throws on an empty list.
double aggregate_article(const std::vector<double>& passage_probs);

/// top-1: singleton argmax, ties to the lexicographically smallest ref.
/// threshold: all candidates with probability >= tau, argmax when none reach it.
/// Empty candidate lists yield an empty selection.
std::vector<ArticleRef> select_relevant(const std::vector<ScoredArticle>& candidates,
                                        const SelectionPolicy& policy);

/// Retrieval -> segmentation -> pair scoring -> per-article max -> ranking.
/// One scorer batch per question. Parallel questions only when the scorer
/// says it is safe (builtin); results are assembled in question order either way.
RunResult run_pipeline(const std::vector<TokenizedQuestion>& questions,
                       const std::vector<TokenizedArticle>& corpus, const Bm25Index& index,
                       const PipelineConfig& cfg, Scorer& scorer, unsigned workers = 1);

/// Weighted mean of per-run probabilities, missing articles contributing 0;
/// selection is re-applied on the combined scores. Weights default to equal.
/// All runs must cover the same question set.
RunResult vote(const std::vector<RunResult>& runs, const std::vector<double>& weights = {});

/// Submission: JSON array of {"question_id", "relevant_articles": [...]},
/// the selections of the run under its policy. A sidecar "<path>.meta.json"
/// records provenance.
void write_submission(const RunResult& run, const std::filesystem::path& path);

void save_run(const RunResult& run, const std::filesystem::path& path);
RunResult load_run(const std::filesystem::path& path);

}  // namespace legalir
