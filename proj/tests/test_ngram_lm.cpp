#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "doctest.h"
#include "legalir/errors.hpp"
#include "legalir/ngram_lm.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace legalir;

namespace {

std::vector<TokenSeq> to_seqs(const std::vector<std::vector<std::string>>& sentences) {
    std::vector<TokenSeq> out;
    for (const auto& s : sentences) out.push_back(make_token_seq(s));
    return out;
}

std::vector<std::vector<std::string>> random_sentences(std::mt19937& rng, std::size_t count,
                                                       int vocab, std::size_t max_len) {
    std::uniform_int_distribution<std::size_t> len(1, max_len);
    std::uniform_int_distribution<int> term(0, vocab - 1);
    std::vector<std::vector<std::string>> out;
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<std::string> s;
        std::size_t n = len(rng);
        for (std::size_t j = 0; j < n; ++j) s.push_back("v" + std::to_string(term(rng)));
        out.push_back(std::move(s));
    }
    return out;
}

/// Sentences walking a cycle over the vocabulary: strong local structure that
/// token shuffling destroys.
std::vector<std::vector<std::string>> structured_sentences(std::size_t count, int vocab,
                                                           std::size_t len) {
    std::vector<std::vector<std::string>> out;
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<std::string> s;
        for (std::size_t j = 0; j < len; ++j) {
            s.push_back("v" + std::to_string(static_cast<int>((i + j) % vocab)));
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

TEST_CASE("train basics") {
    SUBCASE("unigram on 'a a a' makes a the most likely token") {
        auto lm = NGramLm::train(to_seqs({{"a", "a", "a"}}), {1, 0.75, 1});
        double pa = lm.conditional({}, "a");
        for (const auto& w : lm.vocab()) {
            if (w != "a") CHECK(pa > lm.conditional({}, w));
        }
    }
    SUBCASE("equal counts give equal unigram probabilities") {
        auto lm = NGramLm::train(to_seqs({{"a", "b"}, {"b", "a"}}), {1, 0.75, 1});
        CHECK(lm.conditional({}, "a") == doctest::Approx(lm.conditional({}, "b")).epsilon(1e-12));
    }
    SUBCASE("empty corpus and invalid configs are rejected") {
        CHECK_THROWS_AS(NGramLm::train({}, {3, 0.75, 2}), Error);
        CHECK_THROWS_AS(NGramLm::train(to_seqs({{"a"}}), {0, 0.75, 1}), Error);
        CHECK_THROWS_AS(NGramLm::train(to_seqs({{"a"}}), {2, 0.0, 1}), Error);
        CHECK_THROWS_AS(NGramLm::train(to_seqs({{"a"}}), {2, 1.0, 1}), Error);
    }
    SUBCASE("unk threshold folds rare tokens") {
        auto lm = NGramLm::train(to_seqs({{"a", "a", "rare"}, {"a", "a"}}), {2, 0.75, 2});
        CHECK(lm.in_vocab("a"));
        CHECK_FALSE(lm.in_vocab("rare"));
        // an OOV token scores exactly like the unknown sentinel
        double oov = lm.perplexity(make_token_seq({"a", "never-seen"}));
        double unk = lm.perplexity(make_token_seq({"a", "<unk>"}));
        CHECK(oov == doctest::Approx(unk).epsilon(1e-15));
    }
}

TEST_CASE("every observed context's conditional distribution sums to 1") {
    std::mt19937 rng(2024);
    for (int corpus_idx = 0; corpus_idx < 20; ++corpus_idx) {
        std::uniform_int_distribution<std::size_t> order_dist(1, 4);
        NGramLmConfig cfg{order_dist(rng), 0.75, corpus_idx % 2 == 0 ? 1u : 2u};
        auto sentences = random_sentences(rng, 15, 6, 8);
        auto lm = NGramLm::train(to_seqs(sentences), cfg);

        for (const auto& ctx : lm.observed_contexts()) {
            double sum = 0.0;
            for (const auto& w : lm.vocab()) sum += lm.conditional(ctx, w);
            REQUIRE(std::abs(sum - 1.0) <= 1e-9);
        }
    }
}

TEST_CASE("perplexity matches the brute-force oracle") {
    std::mt19937 rng(515);
    for (int corpus_idx = 0; corpus_idx < 12; ++corpus_idx) {
        std::uniform_int_distribution<std::size_t> order_dist(1, 4);
        NGramLmConfig cfg{order_dist(rng), 0.75, 2};
        auto sentences = random_sentences(rng, 20, 8, 9);
        auto lm = NGramLm::train(to_seqs(sentences), cfg);
        oracle::NGramOracle ref(sentences, cfg.order, cfg.discount, cfg.unk_threshold);

        for (int s = 0; s < 10; ++s) {
            auto sentence = random_sentences(rng, 1, 10, 7).front();  // includes OOV terms
            double expected = ref.sentence_log_prob(sentence);
            double actual = lm.sentence_log_prob(make_token_seq(sentence));
            REQUIRE(std::abs(expected - actual) <= 1e-9);
            REQUIRE(std::abs(std::log(ref.perplexity(sentence)) -
                             std::log(lm.perplexity(make_token_seq(sentence)))) <= 1e-9);
        }
        // empty sentence scores only the end sentinel
        double empty_pp = lm.perplexity(TokenSeq{});
        REQUIRE(std::isfinite(empty_pp));
        REQUIRE(std::abs(std::log(empty_pp) - std::log(ref.perplexity({}))) <= 1e-9);
    }
}

TEST_CASE("training sentences have lower perplexity than shuffled versions on average") {
    auto sentences = structured_sentences(120, 12, 8);
    auto lm = NGramLm::train(to_seqs(sentences), {2, 0.75, 1});

    std::mt19937 rng(99);
    double sum_orig = 0.0;
    double sum_shuffled = 0.0;
    for (const auto& s : sentences) {
        sum_orig += std::log(lm.perplexity(make_token_seq(s)));
        auto shuffled = s;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        sum_shuffled += std::log(lm.perplexity(make_token_seq(shuffled)));
    }
    CHECK(sum_orig / 120.0 < sum_shuffled / 120.0);
}

TEST_CASE("unigram perplexity of a doubled sentence") {
    // Under a unigram model the per-token average differs only through the
    // single end sentinel, so the doubled sentence's log-PP is the weighted
    // combination of the same token mass.
    auto lm = NGramLm::train(to_seqs({{"a", "b"}, {"b", "a"}, {"a", "b", "a"}}), {1, 0.75, 1});
    std::vector<std::string> once = {"a", "b"};
    std::vector<std::string> twice = {"a", "b", "a", "b"};
    double lp_once = lm.sentence_log_prob(make_token_seq(once));
    double lp_twice = lm.sentence_log_prob(make_token_seq(twice));
    double eos = lm.conditional({}, "</s>");
    // doubling adds exactly the token mass once more
    CHECK(lp_twice == doctest::Approx(2.0 * lp_once - std::log(eos)).epsilon(1e-12));
}

TEST_CASE("select_indomain filters by threshold preserving order") {
    auto sentences = structured_sentences(30, 6, 6);
    auto lm = NGramLm::train(to_seqs(sentences), {2, 0.75, 1});

    std::vector<TokenSeq> eval;
    eval.push_back(make_token_seq(sentences[0]));               // in-domain
    eval.push_back(make_token_seq({"x9", "x8", "x7", "x6"}));   // all OOV
    eval.push_back(make_token_seq(sentences[1]));

    double pp_in = lm.perplexity(eval[0]);
    double pp_out = lm.perplexity(eval[1]);
    REQUIRE(pp_in < pp_out);

    SUBCASE("threshold between the two keeps only in-domain rows") {
        auto kept = select_indomain(lm, eval, {(pp_in + pp_out) / 2.0, std::nullopt});
        REQUIRE(kept.size() == 2);
        CHECK(kept[0].perplexity == doctest::Approx(pp_in));
        CHECK(kept[1].sentence == kept[1].sentence);
    }
    SUBCASE("threshold below the minimum keeps nothing") {
        CHECK(select_indomain(lm, eval, {pp_in * 0.5, std::nullopt}).empty());
    }
    SUBCASE("huge threshold keeps everything in input order") {
        auto kept = select_indomain(lm, eval, {std::numeric_limits<double>::max(), std::nullopt});
        REQUIRE(kept.size() == 3);
        CHECK(kept[1].perplexity == doctest::Approx(pp_out));
    }
    SUBCASE("optional band floor drops the easiest sentences too") {
        auto kept = select_indomain(lm, eval, {pp_out * 2.0, pp_out - 1.0});
        REQUIRE(kept.size() == 1);
        CHECK(kept[0].perplexity == doctest::Approx(pp_out));
    }
}

TEST_CASE("pre-scored rows reproduce the documented keep/drop partition") {
    // The eight example rows with their published perplexity scores.
    std::vector<ScoredSentence> rows = {
        {"Chây ì nộp phạt nguội.", 277.18},
        {"Nếu chồng chị muốn theo em thì chị cho đi luôn.", 3383.04},
        {"Trong khi Tư khai không dùng số điện thoại này.", 404.96},
        {"Nếu bị cáo trốn thì HĐXX tạm đình chỉ vụ án và yêu cầu CQĐT truy nã bị cáo.", 35.01},
        {"Bên cạnh đó, Thông tư 64/2017 cũng sửa đổi, bổ sung nội dung liên quan đến giấy đăng "
         "ký xe, biển số xe.",
         87.62},
        {"Thị trấn biển Italia giao bán nhà với giá 1 USD.", 1322.54},
        {"Hai bên đã ký hợp đồng công chứng.", 99.30},
        {"Ông Kính, bà Liễu, bà Thơm có yêu cầu bồi thường thiệt hại.", 152.27},
    };
    auto kept = filter_scored(rows, {200.0, std::nullopt});
    REQUIRE(kept.size() == 4);
    CHECK(kept[0].perplexity == doctest::Approx(35.01));
    CHECK(kept[1].perplexity == doctest::Approx(87.62));
    CHECK(kept[2].perplexity == doctest::Approx(99.30));
    CHECK(kept[3].perplexity == doctest::Approx(152.27));

    // filtering is idempotent on its own output
    auto again = filter_scored(kept, {200.0, std::nullopt});
    CHECK(again.size() == kept.size());
}

TEST_CASE("model save/load round trip reproduces identical scores") {
    testutil::TempDir tmp;
    std::mt19937 rng(777);
    auto sentences = random_sentences(rng, 25, 10, 8);
    auto lm = NGramLm::train(to_seqs(sentences), {3, 0.6, 2});
    lm.save(tmp.path() / "model.lm");
    auto loaded = NGramLm::load(tmp.path() / "model.lm");

    CHECK(loaded.config().order == 3);
    CHECK(loaded.config().discount == doctest::Approx(0.6));
    CHECK(loaded.vocab_size() == lm.vocab_size());
    for (int i = 0; i < 20; ++i) {
        auto s = random_sentences(rng, 1, 12, 9).front();
        CHECK(lm.perplexity(make_token_seq(s)) == loaded.perplexity(make_token_seq(s)));
    }

    CHECK_THROWS_AS(NGramLm::load(tmp.path() / "missing.lm"), Error);
    CHECK_THROWS_AS(NGramLm::load(tmp.write("bad.lm", "not a model\n")), Error);
}

TEST_CASE("streaming selection matches the in-memory path") {
    auto sentences = structured_sentences(40, 8, 6);
    auto lm = NGramLm::train(to_seqs(sentences), {2, 0.75, 1});
    TextPipeline pipeline;
    pipeline.normalization.remove_stopwords = false;

    std::string input;
    for (int i = 0; i < 10; ++i) {
        for (const auto& t : sentences[i]) input += t + " ";
        input += "\n";
    }
    input += "zz yy xx\n";  // out-of-domain line

    double threshold = lm.perplexity(make_token_seq(sentences[0])) + 50.0;
    std::istringstream in(input);
    std::ostringstream out;
    auto [read, kept] = select_indomain_stream(lm, in, out, {threshold, std::nullopt}, pipeline, 2);
    CHECK(read == 11);
    CHECK(kept >= 1);
    CHECK(kept < 11);
    // TSV shape: score TAB sentence
    std::string first_line = out.str().substr(0, out.str().find('\n'));
    CHECK(first_line.find('\t') != std::string::npos);
}
