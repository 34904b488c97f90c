#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "legalir/text_normalize.hpp"

namespace legalir::cli {

namespace fs = std::filesystem;

struct NormSection {
    bool lowercase = true;
    bool strip_punctuation = true;
    bool remove_stopwords = true;
};

struct ToolConfig {
    std::uint64_t seed = 0;
    unsigned workers = 0;  // 0 = all available cores
    std::string out = "out";

    // paths
    std::string corpus;
    std::string questions;
    std::string stopwords;
    std::string compounds;
    std::string accent_map;
    std::string abbrev_map;
    std::string model;
    std::string index;
    std::string pairs_file;
    std::string input;
    std::string scores;
    std::string submission;
    std::string predictions;
    std::string query;
    std::vector<std::string> runs;

    NormSection normalization;                                  // BM25/indexing path
    NormSection lm_normalization{true, true, false};            // LM path: stopwords kept

    double bm25_k1 = 1.2;
    double bm25_b = 0.75;

    std::size_t window = 200;
    std::size_t stride = 100;

    std::size_t pair_k = 150;
    std::size_t max_question_tokens = 128;
    double fraction = 0.2;

    std::size_t lm_order = 3;
    double lm_discount = 0.75;
    std::uint32_t lm_unk_threshold = 2;
    double lm_threshold = 200.0;
    std::optional<double> lm_min_threshold;

    std::size_t k_retrieve = 150;
    std::string scorer = "builtin";  // "builtin" | "external"
    std::string scorer_command;
    double scorer_timeout_seconds = 60.0;
    std::string selection = "top1";  // "top1" | "threshold"
    double tau = 0.5;

    std::size_t max_answer_words = 50;
    std::size_t search_k = 10;
    bool qa_mode = false;
    std::vector<double> vote_weights;
};

/// Parses and validates a config file; unknown keys are rejected and every
/// provided path must exist. Values overwrite the given defaults in place.
void apply_config_file(ToolConfig& cfg, const fs::path& path);

/// Fully-resolved effective configuration, echoed into the output directory.
nlohmann::json effective_config(const ToolConfig& cfg);

std::string config_hash(const ToolConfig& cfg);  // fnv1a-64 hex of the effective config

/// Validation shared by every subcommand: ranges and referenced-path existence.
void validate_common(const ToolConfig& cfg);

unsigned resolve_workers(const ToolConfig& cfg);

/// Builds the normalization+tokenization bundle for one of the two paths,
/// loading whichever data files the config names.
TextPipeline make_pipeline(const ToolConfig& cfg, const NormSection& section);

/// Tracks files created under the output directory so a failed run can
/// remove its partial outputs.
class OutputDir {
public:
    explicit OutputDir(const fs::path& dir);

    const fs::path& dir() const { return dir_; }
    fs::path file(const std::string& name);  // registers dir/name as an output
    const std::vector<fs::path>& created() const { return created_; }

    void discard() noexcept;  // removes every registered output

private:
    fs::path dir_;
    std::vector<fs::path> created_;
};

/// summary.json: command, config hash, counts, output names and timings.
/// Timing fields are the only run-to-run nondeterminism in any output.
void write_summary(OutputDir& out, const std::string& command, const ToolConfig& cfg,
                   const nlohmann::json& counts, double elapsed_ms);

std::uint64_t fnv1a64(const std::string& data);

}  // namespace legalir::cli
