#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "cli_support.hpp"
#include "json.hpp"
#include "legalir/bm25.hpp"
#include "legalir/dataset.hpp"
#include "legalir/errors.hpp"
#include "legalir/evaluation.hpp"
#include "legalir/ngram_lm.hpp"
#include "legalir/pipeline.hpp"
#include "legalir/segmentation.hpp"
#include "legalir/text_normalize.hpp"
#include "../src/parallel.hpp"

namespace {

using legalir::Error;
using legalir::cli::OutputDir;
using legalir::cli::ToolConfig;
using nlohmann::json;
namespace fs = std::filesystem;

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

/// One subcommand: binds flags over a ToolConfig, resolves
/// defaults < config file < explicit flags, then runs the handler with
/// partial outputs removed on any failure.
class SubCmd {
public:
    SubCmd(CLI::App& app, const std::string& name, const std::string& desc) {
        cmd_ = app.add_subcommand(name, desc);
        name_ = name;
        cmd_->add_option("--config", config_path_, "JSON config file; flags override its values");
        opt("--seed", &ToolConfig::seed, "seed for all randomness");
        opt("--workers", &ToolConfig::workers, "worker threads (0 = all cores)");
        opt("--out", &ToolConfig::out, "output directory (or $LEGALIR_OUT)");
    }

    template <typename T>
    CLI::Option* opt(const std::string& flag, T ToolConfig::* member, const std::string& desc) {
        auto holder = std::make_shared<T>();
        CLI::Option* o = cmd_->add_option(flag, *holder, desc);
        appliers_.emplace_back(o, [holder, member](ToolConfig& c) { c.*member = *holder; });
        return o;
    }

    CLI::Option* flag(const std::string& name, bool ToolConfig::* member, const std::string& desc) {
        auto holder = std::make_shared<bool>();
        CLI::Option* o = cmd_->add_flag(name, *holder, desc);
        appliers_.emplace_back(o, [holder, member](ToolConfig& c) { c.*member = *holder; });
        return o;
    }

    CLI::Option* norm_opt(const std::string& flag, bool legalir::cli::NormSection::* member,
                          bool lm_section, const std::string& desc) {
        auto holder = std::make_shared<bool>();
        CLI::Option* o = cmd_->add_option(flag, *holder, desc);
        appliers_.emplace_back(o, [holder, member, lm_section](ToolConfig& c) {
            (lm_section ? c.lm_normalization : c.normalization).*member = *holder;
        });
        return o;
    }

    void run(std::function<json(const ToolConfig&, OutputDir&)> handler) {
        cmd_->callback([this, handler]() {
            ToolConfig cfg;
            if (!config_path_.empty()) legalir::cli::apply_config_file(cfg, config_path_);
            // The output dir is the one env-overridable setting; the flag still wins.
            if (const char* env_out = std::getenv("LEGALIR_OUT")) cfg.out = env_out;
            for (auto& [option, apply] : appliers_) {
                if (option->count() > 0) apply(cfg);
            }
            legalir::cli::validate_common(cfg);

            OutputDir out(cfg.out);
            auto started = std::chrono::steady_clock::now();
            try {
                {
                    std::ofstream f(out.file("effective_config.json"), std::ios::binary);
                    f << legalir::cli::effective_config(cfg).dump(2) << "\n";
                }
                json counts = handler(cfg, out);
                double ms = std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - started)
                                .count();
                legalir::cli::write_summary(out, name_, cfg, counts, ms);
            } catch (...) {
                out.discard();
                throw;
            }
        });
    }

    CLI::App* cmd() { return cmd_; }

private:
    CLI::App* cmd_ = nullptr;
    std::string name_;
    std::string config_path_;
    std::vector<std::pair<CLI::Option*, std::function<void(ToolConfig&)>>> appliers_;
};

void require(bool ok, const std::string& msg) {
    if (!ok) throw Error(msg);
}

legalir::Bm25Index load_or_build_index(const ToolConfig& cfg,
                                       const std::vector<legalir::TokenizedArticle>& tokenized) {
    if (!cfg.index.empty()) return legalir::Bm25Index::load(cfg.index);
    return legalir::build_article_index(tokenized, {cfg.bm25_k1, cfg.bm25_b});
}

std::vector<legalir::TokenizedArticle> tokenize_corpus_parallel(
    const std::vector<legalir::Article>& corpus, const legalir::TextPipeline& pipeline,
    unsigned workers) {
    std::vector<legalir::TokenizedArticle> out(corpus.size());
    legalir::parallel_for(corpus.size(), workers, [&](std::size_t i) {
        out[i].law_id = corpus[i].law_id;
        out[i].article_id = corpus[i].article_id;
        out[i].tokens = pipeline.tokens(corpus[i].text);
    });
    return out;
}

json questions_to_json(const std::vector<legalir::Question>& questions) {
    json rows = json::array();
    for (const auto& q : questions) {
        json rel = json::array();
        for (const auto& [law, art] : q.relevant) {
            rel.push_back({{"law_id", law}, {"article_id", art}});
        }
        json row = {{"question_id", q.question_id}, {"text", q.text}, {"relevant_articles", rel}};
        if (q.answer) row["answer"] = *q.answer;
        rows.push_back(std::move(row));
    }
    return rows;
}

legalir::SelectionPolicy make_policy(const ToolConfig& cfg) {
    if (cfg.selection == "threshold") return legalir::ThresholdPolicy{cfg.tau};
    return legalir::TopOnePolicy{};
}

// ---------------------------------------------------------------------------
// subcommand handlers
// ---------------------------------------------------------------------------

json cmd_normalize(const ToolConfig& cfg, OutputDir& out) {
    require(!cfg.input.empty(), "normalize: --in is required");
    legalir::TextPipeline pipeline = legalir::cli::make_pipeline(cfg, cfg.normalization);

    std::vector<std::string> lines = read_lines(cfg.input);
    std::vector<std::string> normalized(lines.size());
    legalir::parallel_for(lines.size(), legalir::cli::resolve_workers(cfg), [&](std::size_t i) {
        normalized[i] = legalir::normalize(lines[i], pipeline.normalization);
    });

    std::ofstream f(out.file("normalized.txt"), std::ios::binary);
    if (!f) throw Error("cannot write normalized.txt");
    for (const auto& line : normalized) f << line << "\n";
    return {{"lines", lines.size()}};
}

json cmd_build_index(const ToolConfig& cfg, OutputDir& out) {
    require(!cfg.corpus.empty(), "build-index: --corpus is required");
    legalir::TextPipeline pipeline = legalir::cli::make_pipeline(cfg, cfg.normalization);
    auto corpus = legalir::load_corpus(cfg.corpus);
    auto tokenized = tokenize_corpus_parallel(corpus, pipeline, legalir::cli::resolve_workers(cfg));
    legalir::Bm25Index index = legalir::build_article_index(tokenized, {cfg.bm25_k1, cfg.bm25_b});
    index.save(out.file("index.json"));
    return {{"documents", index.doc_count()}, {"avg_doc_len", index.avg_doc_len()}};
}

json cmd_search(const ToolConfig& cfg, OutputDir& out) {
    require(!cfg.index.empty() || !cfg.corpus.empty(), "search: --index or --corpus is required");
    legalir::TextPipeline pipeline = legalir::cli::make_pipeline(cfg, cfg.normalization);

    legalir::Bm25Index index = [&]() {
        if (!cfg.index.empty()) return legalir::Bm25Index::load(cfg.index);
        auto corpus = legalir::load_corpus(cfg.corpus);
        auto tokenized =
            tokenize_corpus_parallel(corpus, pipeline, legalir::cli::resolve_workers(cfg));
        return legalir::build_article_index(tokenized, {cfg.bm25_k1, cfg.bm25_b});
    }();

    std::vector<std::pair<std::string, std::string>> queries;
    if (!cfg.query.empty()) {
        queries.emplace_back("query", cfg.query);
    } else {
        require(!cfg.questions.empty(), "search: --query or --questions is required");
        for (const auto& q : legalir::load_questions(cfg.questions)) {
            queries.emplace_back(q.question_id, q.text);
        }
    }

    std::ofstream f(out.file("hits.jsonl"), std::ios::binary);
    if (!f) throw Error("cannot write hits.jsonl");
    std::size_t total_hits = 0;
    for (const auto& [qid, text] : queries) {
        auto hits = index.top_k(pipeline.tokens(text), cfg.search_k);
        std::size_t rank = 1;
        for (const auto& hit : hits) {
            auto [law, art] = legalir::parse_article_doc_id(hit.doc_id);
            json row = {{"question_id", qid}, {"rank", rank++},      {"law_id", law},
                        {"article_id", art}, {"score", hit.score}};
            f << row.dump() << "\n";
        }
        total_hits += hits.size();
    }
    return {{"queries", queries.size()}, {"hits", total_hits}};
}

json cmd_segment(const ToolConfig& cfg, OutputDir& out) {
    require(!cfg.corpus.empty(), "segment: --corpus is required");
    legalir::TextPipeline pipeline = legalir::cli::make_pipeline(cfg, cfg.normalization);
    auto corpus = legalir::load_corpus(cfg.corpus);
    auto tokenized = tokenize_corpus_parallel(corpus, pipeline, legalir::cli::resolve_workers(cfg));
    legalir::SegmentationConfig seg{cfg.window, cfg.stride};

    std::ofstream f(out.file("passages.jsonl"), std::ios::binary);
    if (!f) throw Error("cannot write passages.jsonl");
    std::size_t passage_count = 0;
    for (const auto& article : tokenized) {
        for (const auto& p : legalir::segment(article.tokens, seg)) {
            json row = {{"law_id", article.law_id},
                        {"article_id", article.article_id},
                        {"passage_index", p.passage_index},
                        {"token_offset", p.token_offset},
                        {"text", p.text()}};
            f << row.dump() << "\n";
            ++passage_count;
        }
    }
    return {{"articles", tokenized.size()}, {"passages", passage_count}};
}

json cmd_gen_pairs(const ToolConfig& cfg, OutputDir& out) {
    require(!cfg.corpus.empty(), "gen-pairs: --corpus is required");
    require(!cfg.questions.empty(), "gen-pairs: --questions is required");
    legalir::TextPipeline pipeline = legalir::cli::make_pipeline(cfg, cfg.normalization);
    unsigned workers = legalir::cli::resolve_workers(cfg);

    auto corpus = legalir::load_corpus(cfg.corpus);
    auto questions = legalir::load_questions(cfg.questions, &corpus);
    auto tokenized = tokenize_corpus_parallel(corpus, pipeline, workers);
    auto tokenized_questions = legalir::tokenize_questions(questions, pipeline);
    legalir::Bm25Index index = load_or_build_index(cfg, tokenized);

    legalir::PairGenConfig pair_cfg;
    pair_cfg.top_k = cfg.pair_k;
    pair_cfg.max_question_tokens = cfg.max_question_tokens;
    pair_cfg.segmentation = {cfg.window, cfg.stride};
    auto pairs = legalir::generate_pairs(tokenized_questions, tokenized, index, pair_cfg, workers);
    legalir::save_pairs_jsonl(pairs, out.file("pairs.jsonl"));

    std::size_t positives = 0;
    for (const auto& p : pairs) positives += p.label == 1;
    std::size_t skipped = 0;
    for (const auto& q : tokenized_questions) skipped += q.tokens.size() > cfg.max_question_tokens;
    return {{"questions", questions.size()},
            {"questions_skipped_too_long", skipped},
            {"pairs", pairs.size()},
            {"positives", positives},
            {"negatives", pairs.size() - positives}};
}

json cmd_split(const ToolConfig& cfg, OutputDir& out) {
    require(!cfg.pairs_file.empty(), "split: --pairs is required");
    auto pairs = legalir::load_pairs_jsonl(cfg.pairs_file);
    auto [train, dev] = legalir::split_dev(pairs, cfg.fraction, cfg.seed);
    legalir::save_pairs_jsonl(train, out.file("train.jsonl"));
    legalir::save_pairs_jsonl(dev, out.file("dev.jsonl"));

    auto distinct = [](const std::vector<legalir::TrainingPair>& ps) {
        std::set<std::string> ids;
        for (const auto& p : ps) ids.insert(p.question_id);
        return ids.size();
    };
    return {{"train_pairs", train.size()},
            {"dev_pairs", dev.size()},
            {"train_questions", distinct(train)},
            {"dev_questions", distinct(dev)}};
}

json cmd_build_lm(const ToolConfig& cfg, OutputDir& out) {
    require(!cfg.input.empty(), "build-lm: --in is required");
    legalir::TextPipeline pipeline = legalir::cli::make_pipeline(cfg, cfg.lm_normalization);
    unsigned workers = legalir::cli::resolve_workers(cfg);

    std::vector<std::string> lines = read_lines(cfg.input);
    std::vector<legalir::TokenSeq> tokenized(lines.size());
    legalir::parallel_for(lines.size(), workers,
                          [&](std::size_t i) { tokenized[i] = pipeline.tokens(lines[i]); });

    std::vector<legalir::TokenSeq> sentences;
    std::size_t skipped_empty = 0;
    for (auto& t : tokenized) {
        if (t.empty()) {
            ++skipped_empty;
        } else {
            sentences.push_back(std::move(t));
        }
    }

    legalir::NGramLmConfig lm_cfg{cfg.lm_order, cfg.lm_discount, cfg.lm_unk_threshold};
    legalir::NGramLm lm = legalir::NGramLm::train(sentences, lm_cfg);
    lm.save(out.file("model.lm"));
    return {{"sentences", sentences.size()},
            {"skipped_empty", skipped_empty},
            {"vocab", lm.vocab_size()}};
}

json cmd_ppl(const ToolConfig& cfg, OutputDir& out) {
    require(!cfg.model.empty(), "ppl: --model is required");
    require(!cfg.input.empty(), "ppl: --in is required");
    legalir::NGramLm lm = legalir::NGramLm::load(cfg.model);
    legalir::TextPipeline pipeline = legalir::cli::make_pipeline(cfg, cfg.lm_normalization);

    std::ifstream in(cfg.input, std::ios::binary);
    if (!in) throw Error("cannot open " + cfg.input);
    std::ofstream f(out.file("scored.tsv"), std::ios::binary);
    if (!f) throw Error("cannot write scored.tsv");
    f.precision(12);

    legalir::SelectionConfig all{std::numeric_limits<double>::max(), std::nullopt};
    auto [read, kept] = legalir::select_indomain_stream(lm, in, f, all, pipeline,
                                                        legalir::cli::resolve_workers(cfg));
    (void)kept;
    return {{"lines", read}};
}

json cmd_select_indomain(const ToolConfig& cfg, OutputDir& out) {
    legalir::SelectionConfig selection{cfg.lm_threshold, cfg.lm_min_threshold};

    std::ofstream f(out.file("selected.tsv"), std::ios::binary);
    if (!f) throw Error("cannot write selected.tsv");
    f.precision(12);

    if (!cfg.scores.empty()) {
        // Pre-scored rows: "score<TAB>sentence"; kept lines pass through verbatim.
        std::size_t read = 0;
        std::size_t kept = 0;
        for (const auto& line : read_lines(cfg.scores)) {
            if (line.empty()) continue;
            ++read;
            std::size_t tab = line.find('\t');
            if (tab == std::string::npos) {
                throw Error("select-indomain: " + cfg.scores + " line " + std::to_string(read) +
                            ": expected 'score<TAB>sentence'");
            }
            double score = 0.0;
            try {
                score = std::stod(line.substr(0, tab));
            } catch (const std::exception&) {
                throw Error("select-indomain: " + cfg.scores + " line " + std::to_string(read) +
                            ": unparseable score");
            }
            bool keep = score <= selection.threshold &&
                        (!selection.min_threshold || score >= *selection.min_threshold);
            if (keep) {
                f << line << "\n";
                ++kept;
            }
        }
        return {{"read", read}, {"kept", kept}};
    }

    require(!cfg.model.empty(), "select-indomain: --model (or --scores) is required");
    require(!cfg.input.empty(), "select-indomain: --in is required");
    legalir::NGramLm lm = legalir::NGramLm::load(cfg.model);
    legalir::TextPipeline pipeline = legalir::cli::make_pipeline(cfg, cfg.lm_normalization);
    std::ifstream in(cfg.input, std::ios::binary);
    if (!in) throw Error("cannot open " + cfg.input);
    auto [read, kept] = legalir::select_indomain_stream(lm, in, f, selection, pipeline,
                                                        legalir::cli::resolve_workers(cfg));
    return {{"read", read}, {"kept", kept}};
}

json cmd_run_pipeline(const ToolConfig& cfg, OutputDir& out) {
    require(!cfg.corpus.empty(), "run-pipeline: --corpus is required");
    require(!cfg.questions.empty(), "run-pipeline: --questions is required");
    legalir::TextPipeline pipeline = legalir::cli::make_pipeline(cfg, cfg.normalization);
    unsigned workers = legalir::cli::resolve_workers(cfg);

    auto corpus = legalir::load_corpus(cfg.corpus);
    auto questions = legalir::load_questions(cfg.questions);
    auto tokenized = tokenize_corpus_parallel(corpus, pipeline, workers);
    auto tokenized_questions = legalir::tokenize_questions(questions, pipeline);
    legalir::Bm25Index index = load_or_build_index(cfg, tokenized);

    legalir::PipelineConfig run_cfg;
    run_cfg.k_retrieve = cfg.k_retrieve;
    run_cfg.segmentation = {cfg.window, cfg.stride};
    run_cfg.selection = make_policy(cfg);
    run_cfg.scorer_timeout_seconds = cfg.scorer_timeout_seconds;

    std::unique_ptr<legalir::Scorer> scorer;
    if (cfg.scorer == "external") {
        scorer = std::make_unique<legalir::ExternalProcessScorer>(cfg.scorer_command,
                                                                  cfg.scorer_timeout_seconds);
    } else {
        scorer = std::make_unique<legalir::BuiltinLexicalScorer>(
            legalir::Bm25Params{cfg.bm25_k1, cfg.bm25_b});
    }

    legalir::RunResult run =
        legalir::run_pipeline(tokenized_questions, tokenized, index, run_cfg, *scorer, workers);
    legalir::save_run(run, out.file("run.json"));
    auto submission_path = out.file("submission.json");
    out.file("submission.json.meta.json");  // sidecar created by write_submission
    legalir::write_submission(run, submission_path);

    std::size_t with_candidates = 0;
    for (const auto& qr : run.questions) with_candidates += !qr.ranked.empty();
    return {{"questions", run.questions.size()}, {"questions_with_candidates", with_candidates}};
}

json cmd_vote(const ToolConfig& cfg, OutputDir& out) {
    require(!cfg.runs.empty(), "vote: at least one --run is required");
    std::vector<legalir::RunResult> runs;
    runs.reserve(cfg.runs.size());
    for (const auto& path : cfg.runs) runs.push_back(legalir::load_run(path));

    legalir::RunResult combined = legalir::vote(runs, cfg.vote_weights);
    legalir::save_run(combined, out.file("run.json"));
    auto submission_path = out.file("submission.json");
    out.file("submission.json.meta.json");
    legalir::write_submission(combined, submission_path);
    return {{"runs", runs.size()}, {"questions", combined.questions.size()}};
}

json cmd_evaluate(const ToolConfig& cfg, OutputDir& out) {
    require(!cfg.questions.empty(), "evaluate: --questions is required");
    auto gold = legalir::load_questions(cfg.questions);

    if (cfg.qa_mode) {
        require(!cfg.predictions.empty(), "evaluate --qa: --predictions is required");
        std::ifstream in(cfg.predictions, std::ios::binary);
        if (!in) throw Error("cannot open " + cfg.predictions);
        json doc;
        try {
            in >> doc;
        } catch (const json::exception& e) {
            throw Error("predictions: malformed JSON: " + std::string(e.what()));
        }
        std::map<std::string, std::string> predicted;
        for (const auto& row : doc) {
            predicted[row.at("question_id").get<std::string>()] =
                row.at("answer").get<std::string>();
        }

        json rows = json::array();
        double sum = 0.0;
        for (const auto& q : gold) {
            std::string pred;
            if (auto it = predicted.find(q.question_id); it != predicted.end()) pred = it->second;
            double f1 = legalir::answer_f1(pred, q.answer.value_or(""));
            sum += f1;
            rows.push_back({{"question_id", q.question_id}, {"f1", f1}});
        }
        double macro = gold.empty() ? 0.0 : sum / static_cast<double>(gold.size());
        json report = {{"mode", "qa"}, {"per_query", rows}, {"macro", {{"f1", macro}}}};
        std::ofstream f(out.file("report.json"), std::ios::binary);
        f << report.dump(2) << "\n";
        return {{"questions", gold.size()}, {"macro_f1", macro}};
    }

    require(!cfg.submission.empty(), "evaluate: --submission is required");
    std::ifstream in(cfg.submission, std::ios::binary);
    if (!in) throw Error("cannot open " + cfg.submission);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw Error("submission: malformed JSON: " + std::string(e.what()));
    }
    if (!doc.is_array()) throw Error("submission: top level must be a JSON array");

    std::map<std::string, std::set<legalir::ArticleRef>> predictions;
    for (const auto& row : doc) {
        std::string qid = row.at("question_id").get<std::string>();
        if (predictions.count(qid)) {
            throw Error("submission: duplicate question_id '" + qid + "'");
        }
        auto& refs = predictions[qid];
        for (const auto& a : row.at("relevant_articles")) {
            refs.emplace(a.at("law_id").get<std::string>(), a.at("article_id").get<std::string>());
        }
    }

    legalir::EvalReport report = legalir::evaluate_run(predictions, gold);

    json rows = json::array();
    for (const auto& r : report.per_query) {
        rows.push_back({{"question_id", r.question_id},
                        {"precision", r.precision},
                        {"recall", r.recall},
                        {"f1", r.f1},
                        {"f2", r.f2},
                        {"empty_prediction", r.empty_prediction},
                        {"empty_gold", r.empty_gold}});
    }
    json machine = {{"mode", "retrieval"},
                    {"per_query", std::move(rows)},
                    {"macro",
                     {{"precision", report.macro_precision},
                      {"recall", report.macro_recall},
                      {"f1", report.macro_f1},
                      {"f2", report.macro_f2}}},
                    {"counts",
                     {{"empty_predictions", report.empty_prediction_count},
                      {"empty_gold", report.empty_gold_count}}}};
    {
        std::ofstream f(out.file("report.json"), std::ios::binary);
        f << machine.dump(2) << "\n";
    }
    {
        std::ofstream f(out.file("report.txt"), std::ios::binary);
        f << "question_id                      P        R       F1       F2\n";
        f << "-----------------------------------------------------------\n";
        char buf[160];
        for (const auto& r : report.per_query) {
            std::snprintf(buf, sizeof(buf), "%-28s %8.4f %8.4f %8.4f %8.4f\n",
                          r.question_id.c_str(), r.precision, r.recall, r.f1, r.f2);
            f << buf;
        }
        f << "-----------------------------------------------------------\n";
        std::snprintf(buf, sizeof(buf), "%-28s %8.4f %8.4f %8.4f %8.4f\n", "macro",
                      report.macro_precision, report.macro_recall, report.macro_f1,
                      report.macro_f2);
        f << buf;
        std::snprintf(buf, sizeof(buf), "empty predictions: %zu, empty gold: %zu\n",
                      report.empty_prediction_count, report.empty_gold_count);
        f << buf;
    }
    return {{"questions", gold.size()},
            {"macro_precision", report.macro_precision},
            {"macro_recall", report.macro_recall},
            {"macro_f1", report.macro_f1},
            {"macro_f2", report.macro_f2}};
}

json cmd_filter_qa(const ToolConfig& cfg, OutputDir& out) {
    require(!cfg.questions.empty(), "filter-qa: --questions is required");
    auto questions = legalir::load_questions(cfg.questions);
    auto kept = legalir::filter_qa(questions, cfg.max_answer_words);

    std::size_t dropped_long = 0;
    std::size_t dropped_id_list = 0;
    for (const auto& q : questions) {
        std::string answer = q.answer.value_or("");
        std::istringstream words_in(answer);
        std::size_t words = 0;
        std::string w;
        while (words_in >> w) ++words;
        if (words > cfg.max_answer_words) {
            ++dropped_long;
        } else if (legalir::answer_is_article_id_list(answer)) {
            ++dropped_id_list;
        }
    }

    std::ofstream f(out.file("filtered_questions.json"), std::ios::binary);
    if (!f) throw Error("cannot write filtered_questions.json");
    f << questions_to_json(kept).dump(2) << "\n";
    return {{"input", questions.size()},
            {"kept", kept.size()},
            {"dropped_long_answer", dropped_long},
            {"dropped_article_id_list", dropped_id_list}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"legalir: lexical retrieval, passage reranking and evaluation toolkit"};
    app.require_subcommand(1);

    std::vector<std::unique_ptr<SubCmd>> cmds;
    auto add = [&](const std::string& name, const std::string& desc) -> SubCmd& {
        cmds.push_back(std::make_unique<SubCmd>(app, name, desc));
        return *cmds.back();
    };

    auto add_data_paths = [](SubCmd& c) {
        c.opt("--stopwords", &ToolConfig::stopwords, "stopword list file (one per line)");
        c.opt("--compounds", &ToolConfig::compounds, "compound dictionary file (one per line)");
        c.opt("--accent-map", &ToolConfig::accent_map, "accent standardization map (TSV)");
        c.opt("--abbrev-map", &ToolConfig::abbrev_map, "abbreviation expansion map (TSV)");
    };
    auto add_norm_flags = [](SubCmd& c, bool lm_section) {
        c.norm_opt("--lowercase", &legalir::cli::NormSection::lowercase, lm_section,
                   "lowercase text (true/false)");
        c.norm_opt("--strip-punctuation", &legalir::cli::NormSection::strip_punctuation, lm_section,
                   "strip punctuation and symbols (true/false)");
        c.norm_opt("--remove-stopwords", &legalir::cli::NormSection::remove_stopwords, lm_section,
                   "remove stopwords (true/false)");
    };
    auto add_seg = [](SubCmd& c) {
        c.opt("--window", &ToolConfig::window, "passage window size in tokens");
        c.opt("--stride", &ToolConfig::stride, "passage stride in tokens");
    };
    auto add_bm25 = [](SubCmd& c) {
        c.opt("--k1", &ToolConfig::bm25_k1, "BM25 k1");
        c.opt("--b", &ToolConfig::bm25_b, "BM25 b");
    };

    {
        SubCmd& c = add("normalize", "normalize a text file line by line");
        c.opt("--in", &ToolConfig::input, "input text file");
        add_data_paths(c);
        add_norm_flags(c, false);
        c.run(cmd_normalize);
    }
    {
        SubCmd& c = add("build-index", "build a BM25 index over a corpus");
        c.opt("--corpus", &ToolConfig::corpus, "corpus JSON file");
        add_data_paths(c);
        add_norm_flags(c, false);
        add_bm25(c);
        c.run(cmd_build_index);
    }
    {
        SubCmd& c = add("search", "rank articles for a query or a question file");
        c.opt("--index", &ToolConfig::index, "saved index file");
        c.opt("--corpus", &ToolConfig::corpus, "corpus JSON file (index built on the fly)");
        c.opt("--questions", &ToolConfig::questions, "questions JSON file");
        c.opt("--query", &ToolConfig::query, "single query text");
        c.opt("--k", &ToolConfig::search_k, "hits per query");
        add_data_paths(c);
        add_norm_flags(c, false);
        add_bm25(c);
        c.run(cmd_search);
    }
    {
        SubCmd& c = add("segment", "split articles into overlapping passages");
        c.opt("--corpus", &ToolConfig::corpus, "corpus JSON file");
        add_data_paths(c);
        add_norm_flags(c, false);
        add_seg(c);
        c.run(cmd_segment);
    }
    {
        SubCmd& c = add("gen-pairs", "generate labeled question-passage training pairs");
        c.opt("--corpus", &ToolConfig::corpus, "corpus JSON file");
        c.opt("--questions", &ToolConfig::questions, "questions JSON file");
        c.opt("--index", &ToolConfig::index, "saved index file (otherwise built on the fly)");
        c.opt("--k", &ToolConfig::pair_k, "top-k retrieval per question");
        c.opt("--max-question-tokens", &ToolConfig::max_question_tokens,
              "skip questions longer than this");
        add_data_paths(c);
        add_norm_flags(c, false);
        add_seg(c);
        add_bm25(c);
        c.run(cmd_gen_pairs);
    }
    {
        SubCmd& c = add("split", "question-level train/dev split of a pairs file");
        c.opt("--pairs", &ToolConfig::pairs_file, "pairs JSONL file");
        c.opt("--fraction", &ToolConfig::fraction, "dev fraction in (0,1)");
        c.run(cmd_split);
    }
    {
        SubCmd& c = add("build-lm", "train an n-gram language model on sentences");
        c.opt("--in", &ToolConfig::input, "sentence file, one per line");
        c.opt("--order", &ToolConfig::lm_order, "n-gram order");
        c.opt("--discount", &ToolConfig::lm_discount, "absolute discount in (0,1)");
        c.opt("--unk-threshold", &ToolConfig::lm_unk_threshold,
              "min frequency for vocabulary membership");
        add_data_paths(c);
        add_norm_flags(c, true);
        c.run(cmd_build_lm);
    }
    {
        SubCmd& c = add("ppl", "score per-sentence perplexity under a model");
        c.opt("--model", &ToolConfig::model, "model file from build-lm");
        c.opt("--in", &ToolConfig::input, "sentence file, one per line");
        add_data_paths(c);
        add_norm_flags(c, true);
        c.run(cmd_ppl);
    }
    {
        SubCmd& c = add("select-indomain", "keep sentences whose perplexity is within the threshold");
        c.opt("--model", &ToolConfig::model, "model file from build-lm");
        c.opt("--in", &ToolConfig::input, "sentence file, one per line");
        c.opt("--scores", &ToolConfig::scores, "pre-scored TSV (score<TAB>sentence)");
        c.opt("--threshold", &ToolConfig::lm_threshold, "keep sentences with PP <= threshold");
        c.opt("--min-threshold", &ToolConfig::lm_min_threshold,
              "optional band floor: also require PP >= this");
        add_data_paths(c);
        add_norm_flags(c, true);
        c.run(cmd_select_indomain);
    }
    {
        SubCmd& c = add("run-pipeline", "retrieve, segment, score and select relevant articles");
        c.opt("--corpus", &ToolConfig::corpus, "corpus JSON file");
        c.opt("--questions", &ToolConfig::questions, "questions JSON file");
        c.opt("--index", &ToolConfig::index, "saved index file (otherwise built on the fly)");
        c.opt("--k-retrieve", &ToolConfig::k_retrieve, "articles retained per question");
        c.opt("--scorer", &ToolConfig::scorer, "builtin | external");
        c.opt("--scorer-command", &ToolConfig::scorer_command, "external scorer command line");
        c.opt("--timeout", &ToolConfig::scorer_timeout_seconds, "external scorer batch timeout (s)");
        c.opt("--selection", &ToolConfig::selection, "top1 | threshold");
        c.opt("--tau", &ToolConfig::tau, "threshold selection cutoff");
        add_data_paths(c);
        add_norm_flags(c, false);
        add_seg(c);
        add_bm25(c);
        c.run(cmd_run_pipeline);
    }
    {
        SubCmd& c = add("vote", "combine runs by weighted mean probability");
        c.opt("--run", &ToolConfig::runs, "run.json files (repeatable)");
        c.opt("--weights", &ToolConfig::vote_weights, "per-run weights")->delimiter(',');
        c.run(cmd_vote);
    }
    {
        SubCmd& c = add("evaluate", "score a submission (or QA predictions) against gold questions");
        c.opt("--submission", &ToolConfig::submission, "submission JSON file");
        c.opt("--questions", &ToolConfig::questions, "gold questions JSON file");
        c.opt("--predictions", &ToolConfig::predictions, "QA predictions JSON file");
        c.flag("--qa", &ToolConfig::qa_mode, "evaluate answer texts (token F1) instead of retrieval");
        c.run(cmd_evaluate);
    }
    {
        SubCmd& c = add("filter-qa", "drop QA records with overlong or article-id-list answers");
        c.opt("--questions", &ToolConfig::questions, "questions JSON file with answers");
        c.opt("--max-answer-words", &ToolConfig::max_answer_words, "max answer length in words");
        c.run(cmd_filter_qa);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
