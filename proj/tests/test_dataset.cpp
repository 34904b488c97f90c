#include <algorithm>
#include <set>

#include "doctest.h"
#include "json.hpp"
#include "legalir/dataset.hpp"
#include "legalir/errors.hpp"
#include "test_util.hpp"

using namespace legalir;
using nlohmann::json;

namespace {

std::string small_corpus_json() {
    json laws = json::array();
    laws.push_back({{"id", "law1"},
                    {"articles",
                     {{{"id", "1"}, {"text", "alpha beta"}},
                      {{"id", "2"}, {"text", "gamma delta"}},
                      {{"id", "3"}, {"text", "epsilon zeta"}}}}});
    laws.push_back({{"id", "law2"},
                    {"articles",
                     {{{"id", "1"}, {"text", "eta theta"}},
                      {{"id", "2"}, {"text", "iota kappa"}},
                      {{"id", "3"}, {"text", "lambda mu"}}}}});
    return laws.dump();
}

TextPipeline plain_pipeline() {
    TextPipeline p;
    p.normalization.remove_stopwords = false;
    return p;
}

/// Deterministic retrieval fixture: the question shares a strictly
/// decreasing number of terms with g1 > n1 > n2 > n3 > n4 > far.
struct PairFixture {
    std::vector<Article> corpus;
    std::vector<Question> questions;

    PairFixture() {
        auto art = [](std::string law, std::string id, std::string text) {
            return Article{std::move(law), std::move(id), std::move(text)};
        };
        corpus = {
            art("L", "g1", "q1 q2 q3 q4 q5 filler1 filler2"),
            art("L", "g2", "unrelated words entirely distinct"),
            art("L", "n1", "q1 q2 q3 q4 other1 other2 other3"),
            art("L", "n2", "q1 q2 q3 other4 other5 other6 other7"),
            art("L", "n3", "q1 q2 other8 other9 othera otherb otherc"),
            art("L", "n4", "q1 otherd othere otherf otherg otherh otheri"),
            art("L", "far", "nothing shared here at all ever once"),
        };
        Question q;
        q.question_id = "Q1";
        q.text = "q1 q2 q3 q4 q5";
        q.relevant = {{"L", "g1"}, {"L", "g2"}};
        questions = {q};
    }
};

}  // namespace

TEST_CASE("load_corpus parses laws and articles") {
    testutil::TempDir tmp;
    auto corpus = load_corpus(tmp.write("corpus.json", small_corpus_json()));
    CHECK(corpus.size() == 6);
    CHECK(corpus[0].law_id == "law1");
    CHECK(corpus[3].law_id == "law2");
    CHECK(corpus[3].article_id == "1");
    CHECK(corpus[5].text == "lambda mu");
}

TEST_CASE("load_corpus errors name the record and field") {
    testutil::TempDir tmp;
    SUBCASE("missing text field") {
        std::string bad = R"([{"id": "l", "articles": [{"id": "1"}]}])";
        try {
            load_corpus(tmp.write("bad.json", bad));
            FAIL("expected error");
        } catch (const Error& e) {
            std::string msg = e.what();
            CHECK(msg.find("articles[0]") != std::string::npos);
            CHECK(msg.find("'text'") != std::string::npos);
        }
    }
    SUBCASE("law index reported") {
        std::string bad = R"([{"id": "l", "articles": []}, {"articles": []}])";
        try {
            load_corpus(tmp.write("bad.json", bad));
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("law[1]") != std::string::npos);
        }
    }
    SUBCASE("duplicate article") {
        std::string bad =
            R"([{"id": "l", "articles": [{"id": "1", "text": "a"}, {"id": "1", "text": "b"}]}])";
        CHECK_THROWS_AS(load_corpus(tmp.write("bad.json", bad)), Error);
    }
    SUBCASE("malformed json") {
        CHECK_THROWS_AS(load_corpus(tmp.write("bad.json", "{nope")), Error);
    }
}

TEST_CASE("load_questions parses and validates references") {
    testutil::TempDir tmp;
    auto corpus_path = tmp.write("corpus.json", small_corpus_json());
    auto corpus = load_corpus(corpus_path);

    std::string ok = R"([
        {"question_id": "q1", "text": "hello",
         "relevant_articles": [{"law_id": "law1", "article_id": "2"}]},
        {"question_id": "q2", "text": "world",
         "relevant_articles": [{"law_id": "law2", "article_id": "3"}], "answer": "yes"}
    ])";
    auto questions = load_questions(tmp.write("qs.json", ok), &corpus);
    CHECK(questions.size() == 2);
    CHECK(questions[0].relevant.count({"law1", "2"}) == 1);
    CHECK(questions[1].answer.value() == "yes");

    CHECK(load_questions(tmp.write("empty.json", "[]")).empty());

    std::string dangling = R"([
        {"question_id": "q1", "text": "x",
         "relevant_articles": [{"law_id": "lawX", "article_id": "9"}]}
    ])";
    try {
        load_questions(tmp.write("dangling.json", dangling), &corpus);
        FAIL("expected error");
    } catch (const Error& e) {
        std::string msg = e.what();
        CHECK(msg.find("dangling") != std::string::npos);
        CHECK(msg.find("lawX") != std::string::npos);
    }
    // without a corpus the same file loads fine
    CHECK(load_questions(tmp.write("dangling.json", dangling)).size() == 1);
}

TEST_CASE("pairs JSONL round trip uses the exact field names") {
    testutil::TempDir tmp;
    std::vector<TrainingPair> pairs = {
        {"q1", "law1", "2", 0, "gamma delta", 1},
        {"q1", "law2", "1", 3, "eta theta", 0},
    };
    save_pairs_jsonl(pairs, tmp.path() / "pairs.jsonl");

    std::string raw = testutil::read_file(tmp.path() / "pairs.jsonl");
    json first = json::parse(raw.substr(0, raw.find('\n')));
    for (const char* field :
         {"question_id", "law_id", "article_id", "passage_index", "passage_text", "label"}) {
        CHECK(first.contains(field));
    }

    auto loaded = load_pairs_jsonl(tmp.path() / "pairs.jsonl");
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].question_id == "q1");
    CHECK(loaded[0].label == 1);
    CHECK(loaded[1].passage_index == 3);
    CHECK(loaded[1].passage_text == "eta theta");

    CHECK_THROWS_AS(load_pairs_jsonl(tmp.write("bad.jsonl", "{\"label\": 2}\n")), Error);
}

TEST_CASE("generate_pairs emits gold positives and retrieved negatives") {
    PairFixture fx;
    TextPipeline pipeline = plain_pipeline();
    auto tokenized = tokenize_corpus(fx.corpus, pipeline);
    auto questions = tokenize_questions(fx.questions, pipeline);
    auto index = build_article_index(tokenized);

    PairGenConfig cfg;
    cfg.top_k = 5;
    cfg.max_question_tokens = 128;
    cfg.segmentation = {4, 2};

    auto pairs = generate_pairs(questions, tokenized, index, cfg);

    std::set<std::pair<std::string, int>> got;
    for (const auto& p : pairs) got.insert({p.article_id, p.label});

    // positives: both gold articles, including g2 which retrieval cannot find
    CHECK(got.count({"g1", 1}) == 1);
    CHECK(got.count({"g2", 1}) == 1);
    // negatives: top-5 minus gold = n1..n4
    CHECK(got.count({"n1", 0}) == 1);
    CHECK(got.count({"n2", 0}) == 1);
    CHECK(got.count({"n3", 0}) == 1);
    CHECK(got.count({"n4", 0}) == 1);
    CHECK(pairs.size() == 6);
    // "far" shares nothing and must not appear
    for (const auto& p : pairs) CHECK(p.article_id != "far");

    SUBCASE("no label leakage and negatives within top-k") {
        auto hits = index.top_k(questions[0].tokens, cfg.top_k);
        std::set<std::string> top_ids;
        for (const auto& h : hits) top_ids.insert(parse_article_doc_id(h.doc_id).second);
        std::size_t negatives = 0;
        for (const auto& p : pairs) {
            bool is_gold = fx.questions[0].relevant.count({p.law_id, p.article_id}) > 0;
            CHECK(p.label == (is_gold ? 1 : 0));
            if (p.label == 0) {
                ++negatives;
                CHECK(top_ids.count(p.article_id) == 1);
            }
        }
        CHECK(negatives <= cfg.top_k);
    }

    SUBCASE("pair passages are representative slices") {
        for (const auto& p : pairs) {
            CHECK(!p.passage_text.empty());
        }
    }

    SUBCASE("k=1 with gold on top yields one positive and no negatives") {
        PairGenConfig one = cfg;
        one.top_k = 1;
        Question only_g1;
        only_g1.question_id = "Q2";
        only_g1.text = "q1 q2 q3 q4 q5";
        only_g1.relevant = {{"L", "g1"}};
        auto qs = tokenize_questions({only_g1}, pipeline);
        auto out = generate_pairs(qs, tokenized, index, one);
        REQUIRE(out.size() == 1);
        CHECK(out[0].label == 1);
        CHECK(out[0].article_id == "g1");
    }

    SUBCASE("overlong questions are skipped entirely") {
        PairGenConfig strict = cfg;
        strict.max_question_tokens = 3;
        auto out = generate_pairs(questions, tokenized, index, strict);
        CHECK(out.empty());
    }

    SUBCASE("a token-less gold article is a loud error") {
        auto broken = fx.corpus;
        broken.push_back({"L", "empty", "..."});  // strips to nothing
        Question q;
        q.question_id = "Q3";
        q.text = "q1 q2";
        q.relevant = {{"L", "empty"}};
        auto broken_tokenized = tokenize_corpus(broken, pipeline);
        auto broken_index = build_article_index(broken_tokenized);
        auto qs = tokenize_questions({q}, pipeline);
        CHECK_THROWS_AS(generate_pairs(qs, broken_tokenized, broken_index, cfg), Error);
    }

    SUBCASE("generation is deterministic and worker-count independent") {
        auto again = generate_pairs(questions, tokenized, index, cfg, 4);
        REQUIRE(again.size() == pairs.size());
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            CHECK(again[i].article_id == pairs[i].article_id);
            CHECK(again[i].label == pairs[i].label);
            CHECK(again[i].passage_text == pairs[i].passage_text);
        }
    }
}

TEST_CASE("split_dev is question-level and deterministic") {
    auto pairs_for = [](std::size_t n_questions, std::size_t pairs_each) {
        std::vector<TrainingPair> pairs;
        for (std::size_t q = 0; q < n_questions; ++q) {
            for (std::size_t p = 0; p < pairs_each; ++p) {
                pairs.push_back({"q" + std::to_string(q), "L", "a" + std::to_string(p), 0,
                                 "text", static_cast<int>(p == 0)});
            }
        }
        return pairs;
    };

    SUBCASE("10 questions at 0.2 -> 2 dev questions") {
        auto [train, dev] = split_dev(pairs_for(10, 3), 0.2, 7);
        std::set<std::string> train_ids, dev_ids;
        for (const auto& p : train) train_ids.insert(p.question_id);
        for (const auto& p : dev) dev_ids.insert(p.question_id);
        CHECK(dev_ids.size() == 2);
        CHECK(train_ids.size() == 8);
        for (const auto& id : dev_ids) CHECK(train_ids.count(id) == 0);
        CHECK(train.size() + dev.size() == 30);
        // all pairs of one question land on one side
        CHECK(dev.size() == dev_ids.size() * 3);
    }
    SUBCASE("520 questions at 0.2 -> 104 dev questions") {
        auto [train, dev] = split_dev(pairs_for(520, 1), 0.2, 99);
        CHECK(dev.size() == 104);
        CHECK(train.size() == 416);
    }
    SUBCASE("same seed twice gives the identical split") {
        auto pairs = pairs_for(25, 2);
        auto [t1, d1] = split_dev(pairs, 0.3, 1234);
        auto [t2, d2] = split_dev(pairs, 0.3, 1234);
        REQUIRE(d1.size() == d2.size());
        for (std::size_t i = 0; i < d1.size(); ++i) CHECK(d1[i].question_id == d2[i].question_id);
        auto [t3, d3] = split_dev(pairs, 0.3, 4321);
        bool differs = d3.size() != d1.size();
        for (std::size_t i = 0; !differs && i < d1.size(); ++i) {
            differs = d1[i].question_id != d3[i].question_id;
        }
        CHECK(differs);  // different seed, different shuffle (overwhelmingly)
    }
    SUBCASE("union of pairs is preserved") {
        auto pairs = pairs_for(12, 4);
        auto [train, dev] = split_dev(pairs, 0.25, 5);
        CHECK(train.size() + dev.size() == pairs.size());
    }
    SUBCASE("fewer than 2 questions is an error") {
        CHECK_THROWS_AS(split_dev(pairs_for(1, 5), 0.2, 1), Error);
        CHECK_THROWS_AS(split_dev({}, 0.2, 1), Error);
    }
    SUBCASE("fraction bounds") {
        CHECK_THROWS_AS(split_dev(pairs_for(10, 1), 0.0, 1), Error);
        CHECK_THROWS_AS(split_dev(pairs_for(10, 1), 1.0, 1), Error);
    }
}

TEST_CASE("filter_qa drops overlong and article-id-list answers") {
    auto with_answer = [](std::string id, std::string answer) {
        Question q;
        q.question_id = std::move(id);
        q.text = "t";
        q.answer = std::move(answer);
        return q;
    };

    std::string fifty_one;
    for (int i = 0; i < 51; ++i) fifty_one += "w ";
    std::string fifty;
    for (int i = 0; i < 50; ++i) fifty += "w ";

    std::vector<Question> records = {
        with_answer("long51", fifty_one),
        with_answer("long50", fifty),
        with_answer("idlist", "Điều 123, Điều 168"),
        with_answer("idlist-semicolon", "Điều 1; Điều 2"),
        with_answer("idlist-single", "Điều 5"),
        with_answer("short", "có"),
        with_answer("lowercase-idlist", "điều 7, điều 8"),
        with_answer("prose-with-dieu", "Điều 5 quy định về hợp đồng"),
        with_answer("trailing-dot", "Điều 123."),
    };
    Question no_answer;
    no_answer.question_id = "none";
    no_answer.text = "t";
    records.push_back(no_answer);

    auto kept = filter_qa(records, 50);
    std::set<std::string> ids;
    for (const auto& q : kept) ids.insert(q.question_id);

    CHECK(ids.count("long51") == 0);
    CHECK(ids.count("long50") == 1);
    CHECK(ids.count("idlist") == 0);
    CHECK(ids.count("idlist-semicolon") == 0);
    CHECK(ids.count("idlist-single") == 0);
    CHECK(ids.count("short") == 1);
    CHECK(ids.count("lowercase-idlist") == 0);
    // ambiguous answers are kept
    CHECK(ids.count("prose-with-dieu") == 1);
    CHECK(ids.count("trailing-dot") == 1);
    CHECK(ids.count("none") == 1);
}

TEST_CASE("article doc ids round trip and reject the separator") {
    std::string id = article_doc_id("law/45", "Điều 7");
    auto [law, art] = parse_article_doc_id(id);
    CHECK(law == "law/45");
    CHECK(art == "Điều 7");

    testutil::TempDir tmp;
    std::string bad = R"([{"id": "ab", "articles": [{"id": "1", "text": "t"}]}])";
    CHECK_THROWS_AS(load_corpus(tmp.write("bad.json", bad)), Error);
}
