#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "legalir/bm25.hpp"
#include "legalir/dataset.hpp"
#include "legalir/errors.hpp"
#include "legalir/evaluation.hpp"
#include "legalir/ngram_lm.hpp"
#include "legalir/pipeline.hpp"
#include "legalir/segmentation.hpp"
#include "legalir/text_normalize.hpp"
#include "legalir/unicode.hpp"

namespace py = pybind11;
using namespace legalir;

namespace {

NormalizationConfig config_from_kwargs(bool lowercase, bool strip_punctuation,
                                       bool remove_stopwords,
                                       const std::vector<std::string>& stopwords,
                                       const std::vector<std::pair<std::string, std::string>>& accent_map,
                                       const std::vector<std::pair<std::string, std::string>>& abbreviation_map) {
    NormalizationConfig cfg;
    cfg.lowercase = lowercase;
    cfg.strip_punctuation = strip_punctuation;
    cfg.remove_stopwords = remove_stopwords;
    cfg.stopword_list.insert(stopwords.begin(), stopwords.end());
    cfg.accent_map = accent_map;
    cfg.abbreviation_map = abbreviation_map;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Lexical retrieval, passage reranking and evaluation toolkit";

    m.def("nfc", [](const std::string& s) { return uni::nfc_utf8(s); },
          "Canonical composition (NFC) of a UTF-8 string");

    m.def(
        "normalize",
        [](const std::string& text, bool lowercase, bool strip_punctuation, bool remove_stopwords,
           const std::vector<std::string>& stopwords,
           const std::vector<std::pair<std::string, std::string>>& accent_map,
           const std::vector<std::pair<std::string, std::string>>& abbreviation_map) {
            return normalize(text, config_from_kwargs(lowercase, strip_punctuation,
                                                      remove_stopwords, stopwords, accent_map,
                                                      abbreviation_map));
        },
        py::arg("text"), py::arg("lowercase") = true, py::arg("strip_punctuation") = true,
        py::arg("remove_stopwords") = false, py::arg("stopwords") = std::vector<std::string>{},
        py::arg("accent_map") = std::vector<std::pair<std::string, std::string>>{},
        py::arg("abbreviation_map") = std::vector<std::pair<std::string, std::string>>{});

    m.def(
        "tokenize",
        [](const std::string& text, const std::vector<std::string>& compounds) {
            return tokenize(text, CompoundDict(compounds)).tokens;
        },
        py::arg("text"), py::arg("compounds") = std::vector<std::string>{});

    m.def(
        "remove_stopwords",
        [](const std::vector<std::string>& tokens, const std::vector<std::string>& stopwords) {
            std::unordered_set<std::string> set(stopwords.begin(), stopwords.end());
            return remove_stopwords(make_token_seq(tokens), set).tokens;
        },
        py::arg("tokens"), py::arg("stopwords"));

    py::class_<Bm25Index>(m, "Bm25Index")
        .def_static(
            "build",
            [](const std::vector<std::pair<std::string, std::vector<std::string>>>& docs, double k1,
               double b) {
                std::vector<std::pair<std::string, TokenSeq>> prepared;
                prepared.reserve(docs.size());
                for (const auto& [id, tokens] : docs) {
                    prepared.emplace_back(id, make_token_seq(tokens));
                }
                return Bm25Index::build(prepared, {k1, b});
            },
            py::arg("docs"), py::arg("k1") = 1.2, py::arg("b") = 0.75)
        .def("score",
             [](const Bm25Index& self, const std::vector<std::string>& query,
                const std::string& doc_id) { return self.score(make_token_seq(query), doc_id); })
        .def("top_k",
             [](const Bm25Index& self, const std::vector<std::string>& query, std::size_t k) {
                 std::vector<std::pair<std::string, double>> out;
                 for (const auto& hit : self.top_k(make_token_seq(query), k)) {
                     out.emplace_back(hit.doc_id, hit.score);
                 }
                 return out;
             })
        .def_property_readonly("doc_count", &Bm25Index::doc_count)
        .def_property_readonly("avg_doc_len", &Bm25Index::avg_doc_len)
        .def("save", &Bm25Index::save)
        .def_static("load", &Bm25Index::load);

    m.def(
        "segment",
        [](const std::vector<std::string>& tokens, std::size_t window, std::size_t stride) {
            std::vector<std::tuple<std::size_t, std::size_t, std::vector<std::string>>> out;
            for (const auto& p : segment(make_token_seq(tokens), {window, stride})) {
                out.emplace_back(p.passage_index, p.token_offset, p.tokens.tokens);
            }
            return out;
        },
        py::arg("tokens"), py::arg("window") = 200, py::arg("stride") = 100,
        "Passages as (passage_index, token_offset, tokens) tuples");

    m.def(
        "representative_passage_index",
        [](const std::vector<std::string>& question,
           const std::vector<std::vector<std::string>>& passage_tokens) {
            std::vector<Passage> passages;
            for (std::size_t i = 0; i < passage_tokens.size(); ++i) {
                Passage p;
                p.passage_index = i;
                p.tokens = make_token_seq(passage_tokens[i]);
                passages.push_back(std::move(p));
            }
            return representative_passage(make_token_seq(question), passages).passage_index;
        },
        py::arg("question"), py::arg("passages"));

    py::class_<NGramLm>(m, "NGramLm")
        .def_static(
            "train",
            [](const std::vector<std::vector<std::string>>& sentences, std::size_t order,
               double discount, std::uint32_t unk_threshold) {
                std::vector<TokenSeq> prepared;
                prepared.reserve(sentences.size());
                for (const auto& s : sentences) prepared.push_back(make_token_seq(s));
                return NGramLm::train(prepared, {order, discount, unk_threshold});
            },
            py::arg("sentences"), py::arg("order") = 3, py::arg("discount") = 0.75,
            py::arg("unk_threshold") = 2)
        .def("perplexity",
             [](const NGramLm& self, const std::vector<std::string>& tokens) {
                 return self.perplexity(make_token_seq(tokens));
             })
        .def("sentence_log_prob",
             [](const NGramLm& self, const std::vector<std::string>& tokens) {
                 return self.sentence_log_prob(make_token_seq(tokens));
             })
        .def("conditional", &NGramLm::conditional, py::arg("context"), py::arg("word"))
        .def_property_readonly("vocab_size", &NGramLm::vocab_size)
        .def_property_readonly("vocab", &NGramLm::vocab)
        .def("save", &NGramLm::save)
        .def_static("load", &NGramLm::load);

    m.def(
        "select_indomain",
        [](const NGramLm& lm, const std::vector<std::vector<std::string>>& sentences,
           double threshold) {
            std::vector<TokenSeq> prepared;
            prepared.reserve(sentences.size());
            for (const auto& s : sentences) prepared.push_back(make_token_seq(s));
            std::vector<std::pair<std::string, double>> out;
            for (const auto& r : select_indomain(lm, prepared, {threshold, std::nullopt})) {
                out.emplace_back(r.sentence, r.perplexity);
            }
            return out;
        },
        py::arg("lm"), py::arg("sentences"), py::arg("threshold"));

    m.def(
        "filter_scored",
        [](const std::vector<std::pair<std::string, double>>& rows, double threshold) {
            std::vector<ScoredSentence> prepared;
            for (const auto& [text, pp] : rows) prepared.push_back({text, pp});
            std::vector<std::pair<std::string, double>> out;
            for (const auto& r : filter_scored(prepared, {threshold, std::nullopt})) {
                out.emplace_back(r.sentence, r.perplexity);
            }
            return out;
        },
        py::arg("rows"), py::arg("threshold"));

    m.def("f_beta", &f_beta, py::arg("precision"), py::arg("recall"), py::arg("beta"));
    m.def(
        "prf",
        [](const std::vector<std::pair<std::string, std::string>>& predicted,
           const std::vector<std::pair<std::string, std::string>>& gold) {
            return prf(std::set<ArticleRef>(predicted.begin(), predicted.end()),
                       std::set<ArticleRef>(gold.begin(), gold.end()));
        },
        py::arg("predicted"), py::arg("gold"));
    m.def("answer_f1", &answer_f1, py::arg("predicted"), py::arg("gold"));

    m.def(
        "evaluate",
        [](const std::map<std::string, std::vector<std::pair<std::string, std::string>>>& predictions,
           const std::map<std::string, std::vector<std::pair<std::string, std::string>>>& gold) {
            std::vector<Question> questions;
            for (const auto& [qid, refs] : gold) {
                Question q;
                q.question_id = qid;
                q.relevant.insert(refs.begin(), refs.end());
                questions.push_back(std::move(q));
            }
            std::map<std::string, std::set<ArticleRef>> preds;
            for (const auto& [qid, refs] : predictions) {
                preds[qid] = std::set<ArticleRef>(refs.begin(), refs.end());
            }
            EvalReport report = evaluate_run(preds, questions);
            py::dict out;
            out["macro_precision"] = report.macro_precision;
            out["macro_recall"] = report.macro_recall;
            out["macro_f1"] = report.macro_f1;
            out["macro_f2"] = report.macro_f2;
            out["empty_prediction_count"] = report.empty_prediction_count;
            out["empty_gold_count"] = report.empty_gold_count;
            return out;
        },
        py::arg("predictions"), py::arg("gold"),
        "Macro P/R/F1/F2 of predicted article sets against gold sets");

    m.def("aggregate_article", &aggregate_article, py::arg("passage_probs"));
    m.def(
        "select_relevant",
        [](const std::vector<std::tuple<std::string, std::string, double>>& candidates,
           const std::string& policy, double tau) {
            std::vector<ScoredArticle> prepared;
            for (const auto& [law, art, p] : candidates) prepared.push_back({law, art, p});
            SelectionPolicy pol;
            if (policy == "top1") {
                pol = TopOnePolicy{};
            } else if (policy == "threshold") {
                pol = ThresholdPolicy{tau};
            } else {
                throw Error("select_relevant: policy must be 'top1' or 'threshold'");
            }
            return select_relevant(prepared, pol);
        },
        py::arg("candidates"), py::arg("policy") = "top1", py::arg("tau") = 0.5);
}
