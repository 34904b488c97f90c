#include "legalir/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include "json.hpp"
#include "legalir/errors.hpp"
#include "parallel.hpp"

namespace legalir {

using nlohmann::json;

namespace {

constexpr char kIdSeparator = '\x1f';

json parse_json_file(const std::filesystem::path& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(std::string(what) + ": cannot open " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw Error(std::string(what) + ": malformed JSON in " + path.string() + ": " + e.what());
    }
    return doc;
}

std::string require_string(const json& obj, const char* field, const std::string& where) {
    auto it = obj.find(field);
    if (it == obj.end()) throw Error(where + ": missing field '" + field + "'");
    if (!it->is_string()) throw Error(where + ": field '" + field + "' must be a string");
    return it->get<std::string>();
}

void reject_separator(const std::string& id, const std::string& where) {
    if (id.find(kIdSeparator) != std::string::npos) {
        throw Error(where + ": id contains reserved separator U+001F");
    }
}

}  // namespace

std::string article_doc_id(const std::string& law_id, const std::string& article_id) {
    return law_id + kIdSeparator + article_id;
}

ArticleRef parse_article_doc_id(const std::string& doc_id) {
    std::size_t sep = doc_id.find(kIdSeparator);
    if (sep == std::string::npos) throw Error("not a composite article doc id: " + doc_id);
    return {doc_id.substr(0, sep), doc_id.substr(sep + 1)};
}

std::vector<Article> load_corpus(const std::filesystem::path& path) {
    json doc = parse_json_file(path, "corpus");
    if (!doc.is_array()) throw Error("corpus: top level must be a JSON array of laws");

    std::vector<Article> articles;
    std::set<ArticleRef> seen;
    for (std::size_t li = 0; li < doc.size(); ++li) {
        std::string where = "corpus law[" + std::to_string(li) + "]";
        const json& law = doc[li];
        if (!law.is_object()) throw Error(where + ": must be an object");
        std::string law_id = require_string(law, "id", where);
        reject_separator(law_id, where);
        auto arts = law.find("articles");
        if (arts == law.end() || !arts->is_array()) {
            throw Error(where + ": missing field 'articles' (array)");
        }
        for (std::size_t ai = 0; ai < arts->size(); ++ai) {
            std::string awhere = where + ".articles[" + std::to_string(ai) + "]";
            const json& art = (*arts)[ai];
            if (!art.is_object()) throw Error(awhere + ": must be an object");
            Article a;
            a.law_id = law_id;
            a.article_id = require_string(art, "id", awhere);
            reject_separator(a.article_id, awhere);
            a.text = require_string(art, "text", awhere);
            if (!seen.insert(a.ref()).second) {
                throw Error(awhere + ": duplicate article (" + a.law_id + ", " + a.article_id + ")");
            }
            articles.push_back(std::move(a));
        }
    }
    return articles;
}

std::vector<Question> load_questions(const std::filesystem::path& path,
                                     const std::vector<Article>* corpus) {
    json doc = parse_json_file(path, "questions");
    if (!doc.is_array()) throw Error("questions: top level must be a JSON array");

    std::vector<Question> questions;
    std::set<std::string> seen_ids;
    for (std::size_t qi = 0; qi < doc.size(); ++qi) {
        std::string where = "question[" + std::to_string(qi) + "]";
        const json& q = doc[qi];
        if (!q.is_object()) throw Error(where + ": must be an object");
        Question out;
        out.question_id = require_string(q, "question_id", where);
        out.text = require_string(q, "text", where);
        if (!seen_ids.insert(out.question_id).second) {
            throw Error(where + ": duplicate question_id '" + out.question_id + "'");
        }
        auto rel = q.find("relevant_articles");
        if (rel != q.end()) {
            if (!rel->is_array()) throw Error(where + ": 'relevant_articles' must be an array");
            for (std::size_t ri = 0; ri < rel->size(); ++ri) {
                std::string rwhere = where + ".relevant_articles[" + std::to_string(ri) + "]";
                const json& r = (*rel)[ri];
                if (!r.is_object()) throw Error(rwhere + ": must be an object");
                out.relevant.emplace(require_string(r, "law_id", rwhere),
                                     require_string(r, "article_id", rwhere));
            }
        }
        if (auto ans = q.find("answer"); ans != q.end() && !ans->is_null()) {
            if (!ans->is_string()) throw Error(where + ": field 'answer' must be a string");
            out.answer = ans->get<std::string>();
        }
        questions.push_back(std::move(out));
    }

    if (corpus != nullptr) {
        std::set<ArticleRef> known;
        for (const Article& a : *corpus) known.insert(a.ref());
        std::vector<std::string> dangling;
        for (const Question& q : questions) {
            for (const ArticleRef& r : q.relevant) {
                if (known.find(r) == known.end()) {
                    dangling.push_back(q.question_id + " -> (" + r.first + ", " + r.second + ")");
                }
            }
        }
        if (!dangling.empty()) {
            std::string msg = "questions: dangling relevant references:";
            for (const auto& d : dangling) msg += "\n  " + d;
            throw Error(msg);
        }
    }
    return questions;
}

void save_pairs_jsonl(const std::vector<TrainingPair>& pairs, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("pairs: cannot write " + path.string());
    for (const TrainingPair& p : pairs) {
        json row = {{"question_id", p.question_id}, {"law_id", p.law_id},
                    {"article_id", p.article_id},   {"passage_index", p.passage_index},
                    {"passage_text", p.passage_text}, {"label", p.label}};
        out << row.dump() << "\n";
    }
    if (!out) throw Error("pairs: failed writing " + path.string());
}

std::vector<TrainingPair> load_pairs_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("pairs: cannot open " + path.string());
    std::vector<TrainingPair> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json row;
        try {
            row = json::parse(line);
        } catch (const json::exception& e) {
            throw Error("pairs: " + path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        std::string where = "pair[" + std::to_string(line_no) + "]";
        TrainingPair p;
        p.question_id = require_string(row, "question_id", where);
        p.law_id = require_string(row, "law_id", where);
        p.article_id = require_string(row, "article_id", where);
        p.passage_text = require_string(row, "passage_text", where);
        if (!row.contains("passage_index") || !row["passage_index"].is_number_unsigned()) {
            throw Error(where + ": field 'passage_index' must be a non-negative integer");
        }
        p.passage_index = row["passage_index"].get<std::size_t>();
        if (!row.contains("label") || !row["label"].is_number_integer()) {
            throw Error(where + ": field 'label' must be 0 or 1");
        }
        p.label = row["label"].get<int>();
        if (p.label != 0 && p.label != 1) throw Error(where + ": field 'label' must be 0 or 1");
        pairs.push_back(std::move(p));
    }
    return pairs;
}

std::vector<TokenizedArticle> tokenize_corpus(const std::vector<Article>& corpus,
                                              const TextPipeline& pipeline) {
    std::vector<TokenizedArticle> out(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        out[i].law_id = corpus[i].law_id;
        out[i].article_id = corpus[i].article_id;
        out[i].tokens = pipeline.tokens(corpus[i].text);
    }
    return out;
}

std::vector<TokenizedQuestion> tokenize_questions(const std::vector<Question>& questions,
                                                  const TextPipeline& pipeline) {
    std::vector<TokenizedQuestion> out(questions.size());
    for (std::size_t i = 0; i < questions.size(); ++i) {
        out[i].question_id = questions[i].question_id;
        out[i].text = questions[i].text;
        out[i].tokens = pipeline.tokens(questions[i].text);
        out[i].relevant = questions[i].relevant;
    }
    return out;
}

Bm25Index build_article_index(const std::vector<TokenizedArticle>& articles, Bm25Params params) {
    std::vector<std::pair<std::string, TokenSeq>> docs;
    docs.reserve(articles.size());
    for (const TokenizedArticle& a : articles) {
        docs.emplace_back(article_doc_id(a.law_id, a.article_id), a.tokens);
    }
    return Bm25Index::build(docs, params);
}

std::vector<TrainingPair> generate_pairs(const std::vector<TokenizedQuestion>& questions,
                                         const std::vector<TokenizedArticle>& corpus,
                                         const Bm25Index& index, const PairGenConfig& cfg,
                                         unsigned workers) {
    if (cfg.top_k < 1) throw Error("generate_pairs: top_k must be >= 1");
    cfg.segmentation.validate();

    std::map<ArticleRef, const TokenizedArticle*> by_ref;
    for (const TokenizedArticle& a : corpus) by_ref[{a.law_id, a.article_id}] = &a;

    auto pair_for = [&](const TokenizedQuestion& q, const ArticleRef& ref, int label) {
        auto it = by_ref.find(ref);
        if (it == by_ref.end()) {
            throw Error("generate_pairs: question '" + q.question_id + "' references (" + ref.first +
                        ", " + ref.second + ") which is not in the corpus");
        }
        const TokenizedArticle& article = *it->second;
        std::vector<Passage> passages =
            segment(article.tokens, cfg.segmentation, article_doc_id(ref.first, ref.second));
        if (passages.empty()) {
            throw Error("generate_pairs: article (" + ref.first + ", " + ref.second +
                        ") has no tokens to build a passage from");
        }
        const Passage& rep = representative_passage(q.tokens, passages);
        TrainingPair p;
        p.question_id = q.question_id;
        p.law_id = ref.first;
        p.article_id = ref.second;
        p.label = label;
        p.passage_index = rep.passage_index;
        p.passage_text = rep.text();
        return p;
    };

    std::vector<std::vector<TrainingPair>> per_question(questions.size());
    parallel_for(questions.size(), workers, [&](std::size_t qi) {
        const TokenizedQuestion& q = questions[qi];
        if (q.tokens.size() > cfg.max_question_tokens) return;  // question too long: skipped

        // Positives: every gold article, retrieved or not.
        for (const ArticleRef& ref : q.relevant) {
            per_question[qi].push_back(pair_for(q, ref, 1));
        }
        // Negatives: the top-k retrieval minus gold.
        for (const ScoredHit& hit : index.top_k(q.tokens, cfg.top_k)) {
            ArticleRef ref = parse_article_doc_id(hit.doc_id);
            if (q.relevant.find(ref) == q.relevant.end()) {
                per_question[qi].push_back(pair_for(q, ref, 0));
            }
        }
    });

    std::vector<TrainingPair> pairs;
    for (auto& qp : per_question) {
        for (auto& p : qp) pairs.push_back(std::move(p));
    }
    return pairs;
}

std::pair<std::vector<TrainingPair>, std::vector<TrainingPair>> split_dev(
    const std::vector<TrainingPair>& pairs, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw Error("split_dev: fraction must be in (0, 1)");

    std::vector<std::string> qids;
    {
        std::set<std::string> distinct;
        for (const TrainingPair& p : pairs) distinct.insert(p.question_id);
        qids.assign(distinct.begin(), distinct.end());
    }
    if (qids.size() < 2) throw Error("split_dev: need at least 2 distinct questions");

    std::mt19937_64 rng(seed);
    std::shuffle(qids.begin(), qids.end(), rng);

    std::size_t dev_count =
        static_cast<std::size_t>(std::llround(fraction * static_cast<double>(qids.size())));
    std::set<std::string> dev_ids(qids.begin(), qids.begin() + std::min(dev_count, qids.size()));

    std::pair<std::vector<TrainingPair>, std::vector<TrainingPair>> out;
    for (const TrainingPair& p : pairs) {
        if (dev_ids.count(p.question_id)) {
            out.second.push_back(p);
        } else {
            out.first.push_back(p);
        }
    }
    return out;
}

bool answer_is_article_id_list(const std::string& answer) {
    // "Điều <n>" items separated by commas/semicolons; anything else is kept.
    static const std::regex pattern(
        "^\\s*(Đ|đ)iều\\s+[0-9]+\\s*([,;]\\s*(Đ|đ)iều\\s+[0-9]+\\s*)*$");
    return std::regex_match(answer, pattern);
}

std::vector<Question> filter_qa(const std::vector<Question>& records,
                                std::size_t max_answer_words) {
    std::vector<Question> kept;
    for (const Question& q : records) {
        std::string answer = q.answer.value_or("");
        std::size_t words = 0;
        {
            std::istringstream in(answer);
            std::string w;
            while (in >> w) ++words;
        }
        if (words > max_answer_words) continue;
        if (answer_is_article_id_list(answer)) continue;
        kept.push_back(q);
    }
    return kept;
}

}  // namespace legalir
