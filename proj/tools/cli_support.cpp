#include "cli_support.hpp"

#include <fstream>
#include <set>
#include <thread>

#include "legalir/errors.hpp"

namespace legalir::cli {

using nlohmann::json;

namespace {

json parse_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("config: cannot open " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw Error("config: malformed JSON in " + path.string() + ": " + e.what());
    }
    return doc;
}

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, _] : obj.items()) {
        if (known.find(key) == known.end()) {
            throw Error("config: unknown key '" + where + key + "'");
        }
    }
}

void read_norm_section(const json& obj, NormSection& section, const std::string& where) {
    reject_unknown(obj, {"lowercase", "strip_punctuation", "remove_stopwords"}, where);
    if (obj.contains("lowercase")) section.lowercase = obj["lowercase"].get<bool>();
    if (obj.contains("strip_punctuation")) {
        section.strip_punctuation = obj["strip_punctuation"].get<bool>();
    }
    if (obj.contains("remove_stopwords")) {
        section.remove_stopwords = obj["remove_stopwords"].get<bool>();
    }
}

void require_exists(const std::string& path, const std::string& what) {
    if (path.empty()) return;
    if (!fs::exists(path)) throw Error("config: " + what + " path does not exist: " + path);
}

}  // namespace

void apply_config_file(ToolConfig& cfg, const fs::path& path) {
    json doc = parse_file(path);
    if (!doc.is_object()) throw Error("config: top level must be a JSON object");
    reject_unknown(doc,
                   {"seed", "workers", "out", "paths", "normalization", "lm_normalization", "bm25",
                    "segmentation", "pairs", "lm", "pipeline", "qa", "search"},
                   "");

    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("workers")) cfg.workers = doc["workers"].get<unsigned>();
    if (doc.contains("out")) cfg.out = doc["out"].get<std::string>();

    if (doc.contains("paths")) {
        const json& p = doc["paths"];
        reject_unknown(p,
                       {"corpus", "questions", "stopwords", "compounds", "accent_map", "abbrev_map",
                        "model", "index", "pairs", "input", "scores", "submission", "predictions",
                        "runs"},
                       "paths.");
        auto get = [&](const char* key, std::string& slot) {
            if (p.contains(key)) slot = p[key].get<std::string>();
        };
        get("corpus", cfg.corpus);
        get("questions", cfg.questions);
        get("stopwords", cfg.stopwords);
        get("compounds", cfg.compounds);
        get("accent_map", cfg.accent_map);
        get("abbrev_map", cfg.abbrev_map);
        get("model", cfg.model);
        get("index", cfg.index);
        get("pairs", cfg.pairs_file);
        get("input", cfg.input);
        get("scores", cfg.scores);
        get("submission", cfg.submission);
        get("predictions", cfg.predictions);
        if (p.contains("runs")) cfg.runs = p["runs"].get<std::vector<std::string>>();
    }
    if (doc.contains("normalization")) {
        read_norm_section(doc["normalization"], cfg.normalization, "normalization.");
    }
    if (doc.contains("lm_normalization")) {
        read_norm_section(doc["lm_normalization"], cfg.lm_normalization, "lm_normalization.");
    }
    if (doc.contains("bm25")) {
        const json& b = doc["bm25"];
        reject_unknown(b, {"k1", "b"}, "bm25.");
        if (b.contains("k1")) cfg.bm25_k1 = b["k1"].get<double>();
        if (b.contains("b")) cfg.bm25_b = b["b"].get<double>();
    }
    if (doc.contains("segmentation")) {
        const json& s = doc["segmentation"];
        reject_unknown(s, {"window", "stride"}, "segmentation.");
        if (s.contains("window")) cfg.window = s["window"].get<std::size_t>();
        if (s.contains("stride")) cfg.stride = s["stride"].get<std::size_t>();
    }
    if (doc.contains("pairs")) {
        const json& p = doc["pairs"];
        reject_unknown(p, {"k", "max_question_tokens", "fraction"}, "pairs.");
        if (p.contains("k")) cfg.pair_k = p["k"].get<std::size_t>();
        if (p.contains("max_question_tokens")) {
            cfg.max_question_tokens = p["max_question_tokens"].get<std::size_t>();
        }
        if (p.contains("fraction")) cfg.fraction = p["fraction"].get<double>();
    }
    if (doc.contains("lm")) {
        const json& l = doc["lm"];
        reject_unknown(l, {"order", "discount", "unk_threshold", "threshold", "min_threshold"},
                       "lm.");
        if (l.contains("order")) cfg.lm_order = l["order"].get<std::size_t>();
        if (l.contains("discount")) cfg.lm_discount = l["discount"].get<double>();
        if (l.contains("unk_threshold")) cfg.lm_unk_threshold = l["unk_threshold"].get<std::uint32_t>();
        if (l.contains("threshold")) cfg.lm_threshold = l["threshold"].get<double>();
        if (l.contains("min_threshold") && !l["min_threshold"].is_null()) {
            cfg.lm_min_threshold = l["min_threshold"].get<double>();
        }
    }
    if (doc.contains("pipeline")) {
        const json& p = doc["pipeline"];
        reject_unknown(p, {"k_retrieve", "scorer", "scorer_command", "timeout_seconds", "selection",
                           "tau"},
                       "pipeline.");
        if (p.contains("k_retrieve")) cfg.k_retrieve = p["k_retrieve"].get<std::size_t>();
        if (p.contains("scorer")) cfg.scorer = p["scorer"].get<std::string>();
        if (p.contains("scorer_command")) cfg.scorer_command = p["scorer_command"].get<std::string>();
        if (p.contains("timeout_seconds")) {
            cfg.scorer_timeout_seconds = p["timeout_seconds"].get<double>();
        }
        if (p.contains("selection")) cfg.selection = p["selection"].get<std::string>();
        if (p.contains("tau")) cfg.tau = p["tau"].get<double>();
    }
    if (doc.contains("qa")) {
        const json& q = doc["qa"];
        reject_unknown(q, {"max_answer_words"}, "qa.");
        if (q.contains("max_answer_words")) {
            cfg.max_answer_words = q["max_answer_words"].get<std::size_t>();
        }
    }
    if (doc.contains("search")) {
        const json& s = doc["search"];
        reject_unknown(s, {"k"}, "search.");
        if (s.contains("k")) cfg.search_k = s["k"].get<std::size_t>();
    }
}

nlohmann::json effective_config(const ToolConfig& cfg) {
    json paths = {{"corpus", cfg.corpus},         {"questions", cfg.questions},
                  {"stopwords", cfg.stopwords},   {"compounds", cfg.compounds},
                  {"accent_map", cfg.accent_map}, {"abbrev_map", cfg.abbrev_map},
                  {"model", cfg.model},           {"index", cfg.index},
                  {"pairs", cfg.pairs_file},      {"input", cfg.input},
                  {"scores", cfg.scores},         {"submission", cfg.submission},
                  {"predictions", cfg.predictions}, {"runs", cfg.runs}};
    auto norm = [](const NormSection& s) {
        return json{{"lowercase", s.lowercase},
                    {"strip_punctuation", s.strip_punctuation},
                    {"remove_stopwords", s.remove_stopwords}};
    };
    json lm = {{"order", cfg.lm_order},
               {"discount", cfg.lm_discount},
               {"unk_threshold", cfg.lm_unk_threshold},
               {"threshold", cfg.lm_threshold}};
    lm["min_threshold"] = cfg.lm_min_threshold ? json(*cfg.lm_min_threshold) : json(nullptr);

    return json{
        {"seed", cfg.seed},
        {"workers", cfg.workers},
        {"out", cfg.out},
        {"paths", std::move(paths)},
        {"normalization", norm(cfg.normalization)},
        {"lm_normalization", norm(cfg.lm_normalization)},
        {"bm25", {{"k1", cfg.bm25_k1}, {"b", cfg.bm25_b}}},
        {"segmentation", {{"window", cfg.window}, {"stride", cfg.stride}}},
        {"pairs",
         {{"k", cfg.pair_k},
          {"max_question_tokens", cfg.max_question_tokens},
          {"fraction", cfg.fraction}}},
        {"lm", std::move(lm)},
        {"pipeline",
         {{"k_retrieve", cfg.k_retrieve},
          {"scorer", cfg.scorer},
          {"scorer_command", cfg.scorer_command},
          {"timeout_seconds", cfg.scorer_timeout_seconds},
          {"selection", cfg.selection},
          {"tau", cfg.tau}}},
        {"qa", {{"max_answer_words", cfg.max_answer_words}}},
        {"search", {{"k", cfg.search_k}}},
    };
}

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t hash = 14695981039346656037ull;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

std::string config_hash(const ToolConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(effective_config(cfg).dump())));
    return buf;
}

void validate_common(const ToolConfig& cfg) {
    for (const auto& [path, what] :
         std::vector<std::pair<std::string, std::string>>{{cfg.corpus, "corpus"},
                                                          {cfg.questions, "questions"},
                                                          {cfg.stopwords, "stopwords"},
                                                          {cfg.compounds, "compounds"},
                                                          {cfg.accent_map, "accent_map"},
                                                          {cfg.abbrev_map, "abbrev_map"},
                                                          {cfg.model, "model"},
                                                          {cfg.index, "index"},
                                                          {cfg.pairs_file, "pairs"},
                                                          {cfg.input, "input"},
                                                          {cfg.scores, "scores"},
                                                          {cfg.submission, "submission"},
                                                          {cfg.predictions, "predictions"}}) {
        require_exists(path, what);
    }
    for (const auto& r : cfg.runs) require_exists(r, "run");

    if (cfg.scorer != "builtin" && cfg.scorer != "external") {
        throw Error("config: pipeline.scorer must be 'builtin' or 'external'");
    }
    if (cfg.scorer == "external" && cfg.scorer_command.empty()) {
        throw Error("config: pipeline.scorer_command required for the external scorer");
    }
    if (cfg.selection != "top1" && cfg.selection != "threshold") {
        throw Error("config: pipeline.selection must be 'top1' or 'threshold'");
    }
}

unsigned resolve_workers(const ToolConfig& cfg) {
    if (cfg.workers > 0) return cfg.workers;
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

TextPipeline make_pipeline(const ToolConfig& cfg, const NormSection& section) {
    TextPipeline pipeline;
    pipeline.normalization.lowercase = section.lowercase;
    pipeline.normalization.strip_punctuation = section.strip_punctuation;
    pipeline.normalization.remove_stopwords = section.remove_stopwords;
    if (!cfg.stopwords.empty()) pipeline.normalization.stopword_list = load_word_list(cfg.stopwords);
    if (!cfg.accent_map.empty()) pipeline.normalization.accent_map = load_replacement_map(cfg.accent_map);
    if (!cfg.abbrev_map.empty()) {
        pipeline.normalization.abbreviation_map = load_replacement_map(cfg.abbrev_map);
    }
    if (!cfg.compounds.empty()) pipeline.compounds = load_compound_dict(cfg.compounds);
    return pipeline;
}

OutputDir::OutputDir(const fs::path& dir) : dir_(dir) { fs::create_directories(dir_); }

fs::path OutputDir::file(const std::string& name) {
    fs::path p = dir_ / name;
    created_.push_back(p);
    return p;
}

void OutputDir::discard() noexcept {
    for (const auto& p : created_) {
        std::error_code ec;
        fs::remove(p, ec);
    }
}

void write_summary(OutputDir& out, const std::string& command, const ToolConfig& cfg,
                   const nlohmann::json& counts, double elapsed_ms) {
    json summary = {{"command", command},
                    {"config_hash", config_hash(cfg)},
                    {"counts", counts},
                    {"timings_ms", {{"total", elapsed_ms}}}};
    json outputs = json::array();
    for (const auto& p : out.created()) outputs.push_back(p.filename().string());
    summary["outputs"] = std::move(outputs);

    std::ofstream f(out.file("summary.json"), std::ios::binary);
    if (!f) throw Error("cannot write summary.json");
    f << summary.dump(2) << "\n";
}

}  // namespace legalir::cli
