#include <cmath>
#include <random>

#include "doctest.h"
#include "legalir/bm25.hpp"
#include "legalir/errors.hpp"
#include "legalir/text_normalize.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace legalir;

namespace {

std::vector<std::pair<std::string, TokenSeq>> to_docs(const std::vector<oracle::Doc>& docs) {
    std::vector<std::pair<std::string, TokenSeq>> out;
    for (const auto& [id, tokens] : docs) out.emplace_back(id, make_token_seq(tokens));
    return out;
}

std::vector<oracle::Doc> random_corpus(std::mt19937& rng, std::size_t max_docs,
                                       std::size_t max_len, int vocab) {
    std::uniform_int_distribution<std::size_t> n_docs(1, max_docs);
    std::uniform_int_distribution<std::size_t> n_tokens(0, max_len);
    std::uniform_int_distribution<int> term(0, vocab - 1);
    std::vector<oracle::Doc> docs;
    std::size_t n = n_docs(rng);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::string> tokens;
        std::size_t len = n_tokens(rng);
        for (std::size_t t = 0; t < len; ++t) tokens.push_back("t" + std::to_string(term(rng)));
        docs.emplace_back("d" + std::to_string(i), tokens);
    }
    return docs;
}

std::vector<std::string> random_query(std::mt19937& rng, int vocab) {
    std::uniform_int_distribution<std::size_t> n_terms(1, 6);
    std::uniform_int_distribution<int> term(0, vocab - 1);
    std::vector<std::string> q;
    std::size_t n = n_terms(rng);
    for (std::size_t i = 0; i < n; ++i) q.push_back("t" + std::to_string(term(rng)));
    return q;
}

}  // namespace

TEST_CASE("build_index computes corpus statistics") {
    auto index = Bm25Index::build({{"d1", make_token_seq({"a", "b"})}});
    CHECK(index.doc_count() == 1);
    CHECK(index.avg_doc_len() == doctest::Approx(2.0));

    auto two = Bm25Index::build(
        {{"d1", make_token_seq({"a", "b"})}, {"d2", make_token_seq({"a", "b", "c", "d"})}});
    CHECK(two.doc_count() == 2);
    CHECK(two.avg_doc_len() == doctest::Approx(3.0));

    CHECK_THROWS_AS(Bm25Index::build({}), Error);
    CHECK_THROWS_AS(Bm25Index::build({{"d1", make_token_seq({"a"})}, {"d1", make_token_seq({"b"})}}),
                    Error);
    CHECK_THROWS_AS(Bm25Index::build({{"d1", make_token_seq({"a"})}}, {-1.0, 0.75}), Error);
    CHECK_THROWS_AS(Bm25Index::build({{"d1", make_token_seq({"a"})}}, {1.2, 1.5}), Error);
}

TEST_CASE("score evaluates the documented formula") {
    // Two equal-length docs, term once in d1 only, k1=1.2, b=0.75:
    // idf = ln(1 + 1.5/1.5) = ln 2, tf part = 2.2/2.2 = 1, so score = ln 2.
    auto index = Bm25Index::build(
        {{"d1", make_token_seq({"term", "x"})}, {"d2", make_token_seq({"y", "z"})}});
    CHECK(index.score(make_token_seq({"term"}), "d1") ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(index.score(make_token_seq({"term"}), "d2") == 0.0);

    // absent from the whole corpus -> 0
    CHECK(index.score(make_token_seq({"nowhere"}), "d1") == 0.0);
    // no shared terms -> 0
    CHECK(index.score(make_token_seq({"y"}), "d1") == 0.0);
    // repeated query terms count with multiplicity
    CHECK(index.score(make_token_seq({"term", "term"}), "d1") ==
          doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));

    CHECK_THROWS_AS(index.score(make_token_seq({"term"}), "ghost"), Error);
}

TEST_CASE("top_k ranking semantics") {
    auto docs = to_docs({{"a", {"x", "x", "q"}},
                         {"b", {"x", "y", "q"}},
                         {"c", {"z", "z", "z"}},
                         {"d", {"q", "q", "q"}}});
    auto index = Bm25Index::build(docs);

    SUBCASE("k larger than the corpus returns all positive-scoring docs") {
        auto hits = index.top_k(make_token_seq({"q"}), 100);
        CHECK(hits.size() == 3);  // c never matches
        for (const auto& h : hits) CHECK(h.score > 0.0);
    }
    SUBCASE("no shared terms yields an empty list") {
        CHECK(index.top_k(make_token_seq({"nope"}), 5).empty());
    }
    SUBCASE("verbatim document ranks first") {
        auto hits = index.top_k(make_token_seq({"z", "z", "z"}), 2);
        REQUIRE(!hits.empty());
        CHECK(hits[0].doc_id == "c");
    }
    SUBCASE("ties break by ascending doc id") {
        auto tie_docs = to_docs({{"n2", {"t", "f"}}, {"n1", {"t", "f"}}, {"n3", {"g", "g"}}});
        auto tie_index = Bm25Index::build(tie_docs);
        auto hits = tie_index.top_k(make_token_seq({"t"}), 5);
        REQUIRE(hits.size() == 2);
        CHECK(hits[0].doc_id == "n1");
        CHECK(hits[1].doc_id == "n2");
        CHECK(hits[0].score == hits[1].score);
    }
}

TEST_CASE("oracle equivalence on random corpora") {
    std::mt19937 rng(42);
    for (int iter = 0; iter < 40; ++iter) {
        auto docs = random_corpus(rng, 50, 20, 12);
        auto index = Bm25Index::build(to_docs(docs));
        auto query = random_query(rng, 14);

        for (std::size_t i = 0; i < docs.size(); ++i) {
            double expected = oracle::bm25_score(docs, i, query, 1.2, 0.75);
            double actual = index.score(make_token_seq(query), docs[i].first);
            REQUIRE(std::abs(expected - actual) <= 1e-9);
        }
        auto expected_hits = oracle::bm25_top_k(docs, query, 10, 1.2, 0.75);
        auto actual_hits = index.top_k(make_token_seq(query), 10);
        REQUIRE(expected_hits.size() == actual_hits.size());
        for (std::size_t i = 0; i < expected_hits.size(); ++i) {
            REQUIRE(expected_hits[i].first == actual_hits[i].doc_id);
            REQUIRE(std::abs(expected_hits[i].second - actual_hits[i].score) <= 1e-9);
        }
    }
}

TEST_CASE("adding a query term occurrence never decreases the doc's score") {
    std::mt19937 rng(4242);
    for (int iter = 0; iter < 60; ++iter) {
        auto docs = random_corpus(rng, 8, 12, 6);
        if (docs.size() < 2) continue;
        std::uniform_int_distribution<std::size_t> pick_doc(0, docs.size() - 1);
        std::size_t target = pick_doc(rng);
        std::size_t other = (target + 1) % docs.size();
        auto query = random_query(rng, 6);

        auto before = Bm25Index::build(to_docs(docs));
        double score_before = before.score(make_token_seq(query), docs[target].first);

        auto grown = docs;
        grown[target].second.push_back(query.front());
        grown[other].second.push_back("pad-token");
        auto after = Bm25Index::build(to_docs(grown));
        double score_after = after.score(make_token_seq(query), docs[target].first);

        REQUIRE(score_after >= score_before - 1e-12);
    }
}

TEST_CASE("idf is non-negative for every df") {
    // df in [1, N]: score contributions can never be negative, so ranking a
    // term present in all docs still yields positive scores.
    auto docs = to_docs({{"a", {"t"}}, {"b", {"t"}}, {"c", {"t"}}});
    auto index = Bm25Index::build(docs);
    for (const auto& id : {"a", "b", "c"}) {
        CHECK(index.score(make_token_seq({"t"}), id) > 0.0);
    }
    auto hits = index.top_k(make_token_seq({"t"}), 10);
    CHECK(hits.size() == 3);
}

TEST_CASE("identical inputs build identical rankings") {
    std::mt19937 rng(7);
    auto docs = random_corpus(rng, 30, 15, 8);
    auto query = random_query(rng, 8);

    auto a = Bm25Index::build(to_docs(docs));
    auto b = Bm25Index::build(to_docs(docs));
    auto ha = a.top_k(make_token_seq(query), 20);
    auto hb = b.top_k(make_token_seq(query), 20);
    REQUIRE(ha.size() == hb.size());
    for (std::size_t i = 0; i < ha.size(); ++i) {
        CHECK(ha[i].doc_id == hb[i].doc_id);
        CHECK(ha[i].score == hb[i].score);
    }
}

TEST_CASE("save/load round trip reproduces identical scores") {
    testutil::TempDir tmp;
    std::mt19937 rng(99);
    auto docs = random_corpus(rng, 25, 18, 10);
    auto index = Bm25Index::build(to_docs(docs), {0.9, 0.4});
    index.save(tmp.path() / "index.json");
    auto loaded = Bm25Index::load(tmp.path() / "index.json");

    CHECK(loaded.doc_count() == index.doc_count());
    CHECK(loaded.avg_doc_len() == index.avg_doc_len());
    for (int q = 0; q < 20; ++q) {
        auto query = random_query(rng, 12);
        auto ha = index.top_k(make_token_seq(query), 10);
        auto hb = loaded.top_k(make_token_seq(query), 10);
        REQUIRE(ha.size() == hb.size());
        for (std::size_t i = 0; i < ha.size(); ++i) {
            CHECK(ha[i].doc_id == hb[i].doc_id);
            CHECK(ha[i].score == hb[i].score);
        }
    }

    CHECK_THROWS_AS(Bm25Index::load(tmp.path() / "missing.json"), Error);
    CHECK_THROWS_AS(Bm25Index::load(tmp.write("garbage.json", "{\"format\": \"wrong\"}")), Error);
}
