#include "legalir/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"
#include "legalir/errors.hpp"
#include "parallel.hpp"

namespace legalir {

using nlohmann::json;

namespace {

void require_unique_pair_ids(const std::vector<ScoreRequest>& requests) {
    std::set<std::string> seen;
    for (const ScoreRequest& r : requests) {
        if (!seen.insert(r.pair_id).second) {
            throw Error("scorer: duplicate pair_id '" + r.pair_id + "' in batch");
        }
    }
}

json policy_to_json(const SelectionPolicy& policy) {
    if (std::holds_alternative<TopOnePolicy>(policy)) return {{"type", "top1"}};
    return {{"type", "threshold"}, {"tau", std::get<ThresholdPolicy>(policy).tau}};
}

SelectionPolicy policy_from_json(const json& j) {
    std::string type = j.at("type").get<std::string>();
    if (type == "top1") return TopOnePolicy{};
    if (type == "threshold") return ThresholdPolicy{j.at("tau").get<double>()};
    throw Error("run: unknown selection policy '" + type + "'");
}

}  // namespace

std::string policy_name(const SelectionPolicy& policy) {
    if (std::holds_alternative<TopOnePolicy>(policy)) return "top1";
    return "threshold(" + std::to_string(std::get<ThresholdPolicy>(policy).tau) + ")";
}

void PipelineConfig::validate() const {
    if (k_retrieve < 1) throw Error("pipeline: k_retrieve must be >= 1");
    segmentation.validate();
    if (const auto* t = std::get_if<ThresholdPolicy>(&selection)) {
        if (!(t->tau >= 0.0 && t->tau <= 1.0)) throw Error("pipeline: tau must be in [0, 1]");
    }
    if (!(scorer_timeout_seconds > 0.0)) throw Error("pipeline: scorer timeout must be > 0");
}

std::vector<ScoreResponse> BuiltinLexicalScorer::score(const std::vector<ScoreRequest>& requests) {
    require_unique_pair_ids(requests);
    if (requests.empty()) return {};

    // Each passage is a document of a batch-local index; question-vs-own-passage
    // BM25 scores are then min-max normalized across the batch.
    std::vector<std::pair<std::string, TokenSeq>> docs;
    docs.reserve(requests.size());
    for (std::size_t i = 0; i < requests.size(); ++i) {
        docs.emplace_back(std::to_string(i), tokenize(requests[i].passage_text));
    }
    Bm25Index index = Bm25Index::build(docs, params_);

    std::vector<double> raw(requests.size());
    for (std::size_t i = 0; i < requests.size(); ++i) {
        raw[i] = index.score(tokenize(requests[i].question_text), std::to_string(i));
    }
    auto [min_it, max_it] = std::minmax_element(raw.begin(), raw.end());
    double lo = *min_it;
    double hi = *max_it;

    std::vector<ScoreResponse> out;
    out.reserve(requests.size());
    for (std::size_t i = 0; i < requests.size(); ++i) {
        double p = hi > lo ? (raw[i] - lo) / (hi - lo) : 0.5;
        out.push_back({requests[i].pair_id, std::clamp(p, 0.0, 1.0)});
    }
    return out;
}

double aggregate_article(const std::vector<double>& passage_probs) {
    if (passage_probs.empty()) throw Error("aggregate_article: empty probability list");
    return *std::max_element(passage_probs.begin(), passage_probs.end());
}

std::vector<ArticleRef> select_relevant(const std::vector<ScoredArticle>& candidates,
                                        const SelectionPolicy& policy) {
    if (candidates.empty()) return {};

    auto argmax = [&]() {
        const ScoredArticle* best = &candidates.front();
        for (const ScoredArticle& c : candidates) {
            ArticleRef cref{c.law_id, c.article_id};
            ArticleRef bref{best->law_id, best->article_id};
            if (c.probability > best->probability ||
                (c.probability == best->probability && cref < bref)) {
                best = &c;
            }
        }
        return ArticleRef{best->law_id, best->article_id};
    };

    std::vector<ArticleRef> out;
    if (const auto* t = std::get_if<ThresholdPolicy>(&policy)) {
        for (const ScoredArticle& c : candidates) {
            if (c.probability >= t->tau) out.emplace_back(c.law_id, c.article_id);
        }
        if (out.empty()) out.push_back(argmax());  // threshold reached by nobody: fall back
    } else {
        out.push_back(argmax());
    }
    std::sort(out.begin(), out.end());
    return out;
}

RunResult run_pipeline(const std::vector<TokenizedQuestion>& questions,
                       const std::vector<TokenizedArticle>& corpus, const Bm25Index& index,
                       const PipelineConfig& cfg, Scorer& scorer, unsigned workers) {
    cfg.validate();

    std::map<ArticleRef, std::size_t> article_slot;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        article_slot[{corpus[i].law_id, corpus[i].article_id}] = i;
    }
    std::vector<std::vector<Passage>> passages(corpus.size());
    parallel_for(corpus.size(), workers, [&](std::size_t i) {
        passages[i] = segment(corpus[i].tokens, cfg.segmentation,
                              article_doc_id(corpus[i].law_id, corpus[i].article_id));
    });

    // A shared external process serves batches serially; the builtin scorer
    // is stateless and can score questions in parallel.
    unsigned question_workers = dynamic_cast<BuiltinLexicalScorer*>(&scorer) ? workers : 1;

    std::vector<QuestionResult> results(questions.size());
    parallel_for(questions.size(), question_workers, [&](std::size_t qi) {
        const TokenizedQuestion& q = questions[qi];
        QuestionResult& result = results[qi];
        result.question_id = q.question_id;

        std::vector<ScoredHit> hits = index.top_k(q.tokens, cfg.k_retrieve);
        if (hits.empty()) return;  // empty prediction recorded

        struct Candidate {
            ArticleRef ref;
            std::size_t first_request;
            std::size_t request_count;
        };
        std::vector<Candidate> candidates;
        std::vector<ScoreRequest> requests;
        for (const ScoredHit& hit : hits) {
            ArticleRef ref = parse_article_doc_id(hit.doc_id);
            auto slot = article_slot.find(ref);
            if (slot == article_slot.end()) {
                throw Error("pipeline: index document (" + ref.first + ", " + ref.second +
                            ") is not in the corpus");
            }
            const auto& article_passages = passages[slot->second];
            Candidate c{ref, requests.size(), article_passages.size()};
            for (const Passage& p : article_passages) {
                requests.push_back(
                    {std::to_string(requests.size()), q.text, p.text()});
            }
            if (c.request_count > 0) candidates.push_back(c);
        }
        if (requests.empty()) return;

        std::vector<ScoreResponse> responses = scorer.score(requests);
        if (responses.size() != requests.size()) {
            throw Error("pipeline: scorer returned " + std::to_string(responses.size()) +
                        " responses for " + std::to_string(requests.size()) + " requests");
        }

        for (const Candidate& c : candidates) {
            std::vector<double> probs;
            probs.reserve(c.request_count);
            for (std::size_t r = 0; r < c.request_count; ++r) {
                probs.push_back(responses[c.first_request + r].probability);
            }
            result.ranked.push_back({c.ref.first, c.ref.second, aggregate_article(probs)});
        }
        std::sort(result.ranked.begin(), result.ranked.end(),
                  [](const ScoredArticle& a, const ScoredArticle& b) {
                      if (a.probability != b.probability) return a.probability > b.probability;
                      return ArticleRef{a.law_id, a.article_id} < ArticleRef{b.law_id, b.article_id};
                  });
    });

    RunResult run;
    run.provenance.scorer_name = scorer.name();
    run.provenance.k_retrieve = cfg.k_retrieve;
    run.provenance.segmentation = cfg.segmentation;
    run.provenance.selection = policy_name(cfg.selection);
    run.policy = cfg.selection;
    run.questions = std::move(results);
    return run;
}

RunResult vote(const std::vector<RunResult>& runs, const std::vector<double>& weights) {
    if (runs.empty()) throw Error("vote: no runs given");
    std::vector<double> w = weights;
    if (w.empty()) w.assign(runs.size(), 1.0);
    if (w.size() != runs.size()) throw Error("vote: weight count does not match run count");
    double total_weight = 0.0;
    for (double x : w) {
        if (!(x >= 0.0)) throw Error("vote: weights must be >= 0");
        total_weight += x;
    }
    if (!(total_weight > 0.0)) throw Error("vote: weights sum to zero");

    std::set<std::string> base_ids;
    for (const QuestionResult& qr : runs.front().questions) base_ids.insert(qr.question_id);
    std::vector<std::map<std::string, const QuestionResult*>> lookup(runs.size());
    for (std::size_t r = 0; r < runs.size(); ++r) {
        std::set<std::string> ids;
        for (const QuestionResult& qr : runs[r].questions) {
            ids.insert(qr.question_id);
            lookup[r][qr.question_id] = &qr;
        }
        if (ids != base_ids) throw Error("vote: runs cover different question sets");
    }

    RunResult out;
    std::vector<std::string> names;
    for (const RunResult& r : runs) names.push_back(r.provenance.scorer_name);
    std::string joined;
    for (std::size_t i = 0; i < names.size(); ++i) joined += (i ? ", " : "") + names[i];
    out.provenance = runs.front().provenance;
    out.provenance.scorer_name = "vote(" + joined + ")";
    out.policy = runs.front().policy;

    for (const QuestionResult& base_qr : runs.front().questions) {
        QuestionResult combined;
        combined.question_id = base_qr.question_id;

        // Weighted mean with missing articles contributing zero probability.
        std::map<ArticleRef, double> acc;
        for (std::size_t r = 0; r < runs.size(); ++r) {
            const QuestionResult* qr = lookup[r].at(base_qr.question_id);
            for (const ScoredArticle& a : qr->ranked) {
                acc[{a.law_id, a.article_id}] += w[r] * a.probability;
            }
        }
        for (const auto& [ref, sum] : acc) {
            combined.ranked.push_back({ref.first, ref.second, sum / total_weight});
        }
        std::sort(combined.ranked.begin(), combined.ranked.end(),
                  [](const ScoredArticle& a, const ScoredArticle& b) {
                      if (a.probability != b.probability) return a.probability > b.probability;
                      return ArticleRef{a.law_id, a.article_id} < ArticleRef{b.law_id, b.article_id};
                  });
        out.questions.push_back(std::move(combined));
    }
    return out;
}

void write_submission(const RunResult& run, const std::filesystem::path& path) {
    json rows = json::array();
    for (const QuestionResult& qr : run.questions) {
        json arts = json::array();
        for (const ArticleRef& ref : select_relevant(qr.ranked, run.policy)) {
            arts.push_back({{"law_id", ref.first}, {"article_id", ref.second}});
        }
        rows.push_back({{"question_id", qr.question_id}, {"relevant_articles", std::move(arts)}});
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("submission: cannot write " + path.string());
    out << rows.dump(2) << "\n";
    if (!out) throw Error("submission: failed writing " + path.string());

    json meta = {{"format", "legalir-run-meta"},
                 {"version", 1},
                 {"scorer", run.provenance.scorer_name},
                 {"k_retrieve", run.provenance.k_retrieve},
                 {"window", run.provenance.segmentation.window},
                 {"stride", run.provenance.segmentation.stride},
                 {"selection", policy_name(run.policy)}};
    std::filesystem::path meta_path = path;
    meta_path += ".meta.json";
    std::ofstream meta_out(meta_path, std::ios::binary);
    if (!meta_out) throw Error("submission: cannot write " + meta_path.string());
    meta_out << meta.dump(2) << "\n";
}

void save_run(const RunResult& run, const std::filesystem::path& path) {
    json doc;
    doc["format"] = "legalir-run";
    doc["version"] = 1;
    doc["provenance"] = {{"scorer", run.provenance.scorer_name},
                         {"k_retrieve", run.provenance.k_retrieve},
                         {"window", run.provenance.segmentation.window},
                         {"stride", run.provenance.segmentation.stride},
                         {"selection", run.provenance.selection}};
    doc["policy"] = policy_to_json(run.policy);
    json questions = json::array();
    for (const QuestionResult& qr : run.questions) {
        json ranked = json::array();
        for (const ScoredArticle& a : qr.ranked) {
            ranked.push_back({{"law_id", a.law_id},
                              {"article_id", a.article_id},
                              {"probability", a.probability}});
        }
        questions.push_back({{"question_id", qr.question_id}, {"candidates", std::move(ranked)}});
    }
    doc["questions"] = std::move(questions);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("run: cannot write " + path.string());
    out << doc.dump() << "\n";
    if (!out) throw Error("run: failed writing " + path.string());
}

RunResult load_run(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("run: cannot open " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw Error("run: malformed run file " + path.string() + ": " + e.what());
    }
    if (doc.value("format", "") != "legalir-run" || doc.value("version", 0) != 1) {
        throw Error("run: " + path.string() + " is not a version-1 legalir-run file");
    }

    RunResult run;
    const json& prov = doc.at("provenance");
    run.provenance.scorer_name = prov.at("scorer").get<std::string>();
    run.provenance.k_retrieve = prov.at("k_retrieve").get<std::size_t>();
    run.provenance.segmentation.window = prov.at("window").get<std::size_t>();
    run.provenance.segmentation.stride = prov.at("stride").get<std::size_t>();
    run.provenance.selection = prov.at("selection").get<std::string>();
    run.policy = policy_from_json(doc.at("policy"));
    for (const json& q : doc.at("questions")) {
        QuestionResult qr;
        qr.question_id = q.at("question_id").get<std::string>();
        for (const json& c : q.at("candidates")) {
            qr.ranked.push_back({c.at("law_id").get<std::string>(),
                                 c.at("article_id").get<std::string>(),
                                 c.at("probability").get<double>()});
        }
        run.questions.push_back(std::move(qr));
    }
    return run;
}

}  // namespace legalir
