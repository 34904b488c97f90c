#include <algorithm>
#include <random>
#include <string>

#include "doctest.h"
#include "legalir/errors.hpp"
#include "legalir/pipeline.hpp"
#include "test_util.hpp"

using namespace legalir;

namespace {

const char* kEchoScorer = R"PY(
import sys, json
print(json.dumps({"protocol": "legalir-scorer/1", "name": "const"}), flush=True)
for line in sys.stdin:
    req = json.loads(line)
    print(json.dumps({"pair_id": req["pair_id"], "probability": 0.7}), flush=True)
)PY";

const char* kMalformedSecondLine = R"PY(
import sys, json
print(json.dumps({"protocol": "legalir-scorer/1"}), flush=True)
i = 0
for line in sys.stdin:
    req = json.loads(line)
    i += 1
    if i == 2:
        print("this is not json", flush=True)
    else:
        print(json.dumps({"pair_id": req["pair_id"], "probability": 0.5}), flush=True)
)PY";

const char* kCrashAfterFirst = R"PY(
import sys, json
print(json.dumps({"protocol": "legalir-scorer/1"}), flush=True)
line = sys.stdin.readline()
req = json.loads(line)
print(json.dumps({"pair_id": req["pair_id"], "probability": 0.5}), flush=True)
sys.exit(3)
)PY";

const char* kBadHandshake = R"PY(
import sys, json
print(json.dumps({"protocol": "bogus/9"}), flush=True)
)PY";

const char* kSleepy = R"PY(
import sys, json, time
print(json.dumps({"protocol": "legalir-scorer/1"}), flush=True)
sys.stdin.readline()
time.sleep(10)
)PY";

const char* kWrongIds = R"PY(
import sys, json
print(json.dumps({"protocol": "legalir-scorer/1"}), flush=True)
for line in sys.stdin:
    req = json.loads(line)
    print(json.dumps({"pair_id": req["pair_id"] + "-oops", "probability": 0.5}), flush=True)
)PY";

// Scores by received pair_id so selections are hand-computable.
const char* kScripted = R"PY(
import sys, json
print(json.dumps({"protocol": "legalir-scorer/1", "name": "scripted"}), flush=True)
table = {"0": 0.2, "1": 0.9}
for line in sys.stdin:
    req = json.loads(line)
    print(json.dumps({"pair_id": req["pair_id"],
                      "probability": table.get(req["pair_id"], 0.1)}), flush=True)
)PY";

std::string scorer_command(const testutil::TempDir& tmp, const char* name, const char* body) {
    auto path = tmp.write(name, body);
    return "python3 " + path.string();
}

std::vector<ScoreRequest> simple_requests(std::size_t n) {
    std::vector<ScoreRequest> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({std::to_string(i), "question text", "passage " + std::to_string(i)});
    }
    return out;
}

struct PipelineFixture {
    std::vector<TokenizedArticle> corpus;
    std::vector<TokenizedQuestion> questions;
    Bm25Index index;

    static PipelineFixture make() {
        TextPipeline pipeline;
        pipeline.normalization.remove_stopwords = false;
        std::vector<Article> articles = {
            {"L", "a1", "shared alpha beta gamma delta"},
            {"L", "a2", "shared epsilon zeta target needle crux"},
            {"L", "a3", "shared unrelated words here now"},
        };
        Question q;
        q.question_id = "Q1";
        q.text = "shared target needle crux";  // "shared" keeps competitors in the pool
        q.relevant = {{"L", "a2"}};

        PipelineFixture fx{tokenize_corpus(articles, pipeline),
                           tokenize_questions({q}, pipeline),
                           build_article_index(tokenize_corpus(articles, pipeline))};
        return fx;
    }
};

}  // namespace

TEST_CASE("builtin scorer min-max normalizes within the batch") {
    BuiltinLexicalScorer scorer;

    SUBCASE("batch of one degenerates to 0.5") {
        auto out = scorer.score({{"p1", "some question", "some passage"}});
        REQUIRE(out.size() == 1);
        CHECK(out[0].probability == doctest::Approx(0.5));
    }
    SUBCASE("all-equal raw scores map to 0.5") {
        auto out = scorer.score({{"p1", "q tokens", "same passage text"},
                                 {"p2", "q tokens", "same passage text"}});
        REQUIRE(out.size() == 2);
        CHECK(out[0].probability == doctest::Approx(0.5));
        CHECK(out[1].probability == doctest::Approx(0.5));
    }
    SUBCASE("full containment vs no overlap spans [0, 1]") {
        auto out = scorer.score({{"p1", "needle crux", "the needle crux passage"},
                                 {"p2", "needle crux", "entirely different words"}});
        REQUIRE(out.size() == 2);
        CHECK(out[0].probability == doctest::Approx(1.0));
        CHECK(out[1].probability == doctest::Approx(0.0));
    }
    SUBCASE("duplicate pair ids are rejected") {
        CHECK_THROWS_AS(scorer.score({{"dup", "q", "a"}, {"dup", "q", "b"}}), Error);
    }
    SUBCASE("responses preserve request order and ids") {
        auto reqs = simple_requests(5);
        auto out = scorer.score(reqs);
        REQUIRE(out.size() == 5);
        for (std::size_t i = 0; i < 5; ++i) CHECK(out[i].pair_id == reqs[i].pair_id);
    }
}

TEST_CASE("external scorer protocol round trip") {
    testutil::TempDir tmp;
    ExternalProcessScorer scorer(scorer_command(tmp, "echo.py", kEchoScorer), 20.0);

    auto reqs = simple_requests(100);
    auto out = scorer.score(reqs);
    REQUIRE(out.size() == 100);
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(out[i].pair_id == reqs[i].pair_id);
        CHECK(out[i].probability == doctest::Approx(0.7));
    }

    // a second batch reuses the same child process
    auto again = scorer.score(simple_requests(3));
    CHECK(again.size() == 3);
}

TEST_CASE("external scorer failure modes carry the offending pair_id") {
    testutil::TempDir tmp;

    SUBCASE("malformed response line") {
        ExternalProcessScorer scorer(scorer_command(tmp, "bad.py", kMalformedSecondLine), 20.0);
        try {
            scorer.score(simple_requests(3));
            FAIL("expected error");
        } catch (const Error& e) {
            std::string msg = e.what();
            CHECK(msg.find("malformed") != std::string::npos);
            CHECK(msg.find("'1'") != std::string::npos);  // second request's pair_id
        }
    }
    SUBCASE("crash mid-batch") {
        ExternalProcessScorer scorer(scorer_command(tmp, "crash.py", kCrashAfterFirst), 20.0);
        try {
            scorer.score(simple_requests(3));
            FAIL("expected error");
        } catch (const Error& e) {
            std::string msg = e.what();
            CHECK(msg.find("'1'") != std::string::npos);
            CHECK(msg.find("status 3") != std::string::npos);
        }
    }
    SUBCASE("unsupported handshake") {
        ExternalProcessScorer scorer(scorer_command(tmp, "hs.py", kBadHandshake), 20.0);
        try {
            scorer.score(simple_requests(1));
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("bogus/9") != std::string::npos);
        }
    }
    SUBCASE("timeout names the awaited pair") {
        ExternalProcessScorer scorer(scorer_command(tmp, "sleepy.py", kSleepy), 0.5);
        try {
            scorer.score(simple_requests(1));
            FAIL("expected error");
        } catch (const Error& e) {
            std::string msg = e.what();
            CHECK(msg.find("timeout") != std::string::npos);
            CHECK(msg.find("'0'") != std::string::npos);
        }
    }
    SUBCASE("pair_id mismatch breaks the bijection") {
        ExternalProcessScorer scorer(scorer_command(tmp, "wrong.py", kWrongIds), 20.0);
        CHECK_THROWS_AS(scorer.score(simple_requests(2)), Error);
    }
}

TEST_CASE("aggregate_article is max") {
    CHECK(aggregate_article({0.2, 0.9, 0.4}) == doctest::Approx(0.9));
    CHECK(aggregate_article({0.5}) == doctest::Approx(0.5));
    CHECK(aggregate_article({0.3, 0.3, 0.3}) == doctest::Approx(0.3));
    CHECK_THROWS_AS(aggregate_article({}), Error);

    std::mt19937 rng(5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> probs;
        std::size_t n = 1 + rng() % 8;
        for (std::size_t j = 0; j < n; ++j) probs.push_back(unit(rng));
        auto sorted = probs;
        std::sort(sorted.begin(), sorted.end());
        CHECK(aggregate_article(probs) == sorted.back());
    }
}

TEST_CASE("select_relevant policies") {
    std::vector<ScoredArticle> candidates = {{"l", "A", 0.9}, {"l", "B", 0.3}};

    SUBCASE("top-1 picks the argmax") {
        auto out = select_relevant(candidates, TopOnePolicy{});
        REQUIRE(out.size() == 1);
        CHECK(out[0] == ArticleRef{"l", "A"});
    }
    SUBCASE("threshold keeps everything at or above tau") {
        auto out = select_relevant({{"l", "A", 0.9}, {"l", "B", 0.8}}, ThresholdPolicy{0.75});
        REQUIRE(out.size() == 2);
    }
    SUBCASE("threshold falls back to argmax when nothing qualifies") {
        auto out = select_relevant(candidates, ThresholdPolicy{0.95});
        REQUIRE(out.size() == 1);
        CHECK(out[0] == ArticleRef{"l", "A"});
    }
    SUBCASE("top-1 tie breaks to the lexicographically smallest ref") {
        auto out = select_relevant({{"l", "B", 0.5}, {"l", "A", 0.5}}, TopOnePolicy{});
        REQUIRE(out.size() == 1);
        CHECK(out[0] == ArticleRef{"l", "A"});
    }
    SUBCASE("empty candidates yield an empty selection") {
        CHECK(select_relevant({}, TopOnePolicy{}).empty());
    }
}

TEST_CASE("run_pipeline end to end with the builtin scorer") {
    auto fx = PipelineFixture::make();
    PipelineConfig cfg;
    cfg.k_retrieve = 150;
    cfg.segmentation = {3, 2};
    cfg.selection = TopOnePolicy{};

    BuiltinLexicalScorer scorer;
    RunResult run = run_pipeline(fx.questions, fx.corpus, fx.index, cfg, scorer);

    REQUIRE(run.questions.size() == 1);
    REQUIRE(!run.questions[0].ranked.empty());
    CHECK(run.questions[0].ranked[0].article_id == "a2");  // contains the question verbatim
    auto selected = select_relevant(run.questions[0].ranked, run.policy);
    REQUIRE(selected.size() == 1);
    CHECK(selected[0] == ArticleRef{"L", "a2"});
    CHECK(run.provenance.scorer_name == "builtin-lexical");
    CHECK(run.provenance.k_retrieve == 150);

    SUBCASE("deterministic across repeated runs and worker counts") {
        RunResult again = run_pipeline(fx.questions, fx.corpus, fx.index, cfg, scorer, 4);
        REQUIRE(again.questions.size() == run.questions.size());
        for (std::size_t q = 0; q < run.questions.size(); ++q) {
            REQUIRE(again.questions[q].ranked.size() == run.questions[q].ranked.size());
            for (std::size_t i = 0; i < run.questions[q].ranked.size(); ++i) {
                CHECK(again.questions[q].ranked[i].article_id ==
                      run.questions[q].ranked[i].article_id);
                CHECK(again.questions[q].ranked[i].probability ==
                      run.questions[q].ranked[i].probability);
            }
        }
    }

    SUBCASE("submission files are byte-identical across runs") {
        testutil::TempDir tmp;
        write_submission(run, tmp.path() / "a.json");
        RunResult again = run_pipeline(fx.questions, fx.corpus, fx.index, cfg, scorer, 3);
        write_submission(again, tmp.path() / "b.json");
        CHECK(testutil::read_file(tmp.path() / "a.json") ==
              testutil::read_file(tmp.path() / "b.json"));
        CHECK(std::filesystem::exists(tmp.path() / "a.json.meta.json"));
    }

    SUBCASE("question with no candidates records an empty prediction") {
        TextPipeline pipeline;
        pipeline.normalization.remove_stopwords = false;
        Question hopeless;
        hopeless.question_id = "QX";
        hopeless.text = "zzz qqq www";
        auto qs = tokenize_questions({hopeless}, pipeline);
        RunResult empty_run = run_pipeline(qs, fx.corpus, fx.index, cfg, scorer);
        REQUIRE(empty_run.questions.size() == 1);
        CHECK(empty_run.questions[0].ranked.empty());
        auto sel = select_relevant(empty_run.questions[0].ranked, empty_run.policy);
        CHECK(sel.empty());
    }
}

TEST_CASE("run_pipeline with a scripted external scorer reproduces hand-computed selections") {
    testutil::TempDir tmp;
    auto fx = PipelineFixture::make();
    PipelineConfig cfg;
    cfg.k_retrieve = 2;
    cfg.segmentation = {10, 10};  // one passage per article
    cfg.selection = TopOnePolicy{};

    // Retrieval order for "target needle crux" is a2 (all terms) then the
    // shared-term articles; pair ids are assigned in that order, so the
    // scripted table {0: 0.2, 1: 0.9} flips the ranking.
    ExternalProcessScorer scorer(scorer_command(tmp, "scripted.py", kScripted), 20.0);
    RunResult run = run_pipeline(fx.questions, fx.corpus, fx.index, cfg, scorer);

    REQUIRE(run.questions.size() == 1);
    REQUIRE(run.questions[0].ranked.size() == 2);
    CHECK(run.questions[0].ranked[0].probability == doctest::Approx(0.9));
    CHECK(run.questions[0].ranked[0].article_id != "a2");  // the 0.9 went to the second hit
    auto selected = select_relevant(run.questions[0].ranked, run.policy);
    REQUIRE(selected.size() == 1);
    CHECK(selected[0].second != "a2");
}

TEST_CASE("run_pipeline aborts with pair diagnostics when the scorer fails") {
    testutil::TempDir tmp;
    auto fx = PipelineFixture::make();
    PipelineConfig cfg;
    cfg.segmentation = {3, 2};

    ExternalProcessScorer scorer(scorer_command(tmp, "bad.py", kMalformedSecondLine), 20.0);
    try {
        run_pipeline(fx.questions, fx.corpus, fx.index, cfg, scorer);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("pair_id") != std::string::npos);
    }
}

TEST_CASE("vote combines runs by weighted mean with missing-as-zero") {
    auto make_run = [](std::vector<ScoredArticle> ranked) {
        RunResult run;
        run.provenance.scorer_name = "test";
        run.policy = TopOnePolicy{};
        QuestionResult qr;
        qr.question_id = "Q1";
        qr.ranked = std::move(ranked);
        std::sort(qr.ranked.begin(), qr.ranked.end(), [](const auto& a, const auto& b) {
            return a.probability > b.probability;
        });
        run.questions.push_back(std::move(qr));
        return run;
    };

    SUBCASE("agreeing runs keep the agreed article") {
        RunResult v = vote({make_run({{"l", "A", 0.8}}), make_run({{"l", "A", 0.6}})});
        auto sel = select_relevant(v.questions[0].ranked, v.policy);
        REQUIRE(sel.size() == 1);
        CHECK(sel[0] == ArticleRef{"l", "A"});
        CHECK(v.questions[0].ranked[0].probability == doctest::Approx(0.7));
    }
    SUBCASE("missing articles contribute zero") {
        RunResult v = vote({make_run({{"l", "A", 1.0}}), make_run({{"l", "B", 0.6}})});
        REQUIRE(v.questions[0].ranked.size() == 2);
        CHECK(v.questions[0].ranked[0].article_id == "A");
        CHECK(v.questions[0].ranked[0].probability == doctest::Approx(0.5));
        CHECK(v.questions[0].ranked[1].probability == doctest::Approx(0.3));
    }
    SUBCASE("single-run vote is the identity on selections") {
        std::mt19937 rng(17);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (int i = 0; i < 10; ++i) {
            std::vector<ScoredArticle> ranked;
            std::size_t n = 1 + rng() % 6;
            for (std::size_t a = 0; a < n; ++a) {
                ranked.push_back({"l", "art" + std::to_string(a), unit(rng)});
            }
            RunResult run = make_run(ranked);
            RunResult voted = vote({run});
            CHECK(select_relevant(voted.questions[0].ranked, voted.policy) ==
                  select_relevant(run.questions[0].ranked, run.policy));
        }
    }
    SUBCASE("weights shift the mean") {
        RunResult v = vote({make_run({{"l", "A", 1.0}}), make_run({{"l", "B", 0.9}})}, {1.0, 3.0});
        // A: 1.0/4, B: 2.7/4
        CHECK(v.questions[0].ranked[0].article_id == "B");
        CHECK(v.questions[0].ranked[0].probability == doctest::Approx(0.675));
    }
    SUBCASE("mismatched question sets are rejected") {
        RunResult other = make_run({{"l", "A", 0.5}});
        other.questions[0].question_id = "Q2";
        CHECK_THROWS_AS(vote({make_run({{"l", "A", 0.5}}), other}), Error);
    }
    SUBCASE("bad weights are rejected") {
        CHECK_THROWS_AS(vote({make_run({{"l", "A", 0.5}})}, {1.0, 2.0}), Error);
        CHECK_THROWS_AS(vote({make_run({{"l", "A", 0.5}})}, {0.0}), Error);
        CHECK_THROWS_AS(vote({}), Error);
    }
}

TEST_CASE("run save/load round trip") {
    testutil::TempDir tmp;
    auto fx = PipelineFixture::make();
    PipelineConfig cfg;
    cfg.segmentation = {3, 2};
    cfg.selection = ThresholdPolicy{0.4};
    BuiltinLexicalScorer scorer;
    RunResult run = run_pipeline(fx.questions, fx.corpus, fx.index, cfg, scorer);

    save_run(run, tmp.path() / "run.json");
    RunResult loaded = load_run(tmp.path() / "run.json");
    CHECK(loaded.provenance.scorer_name == run.provenance.scorer_name);
    CHECK(policy_name(loaded.policy) == policy_name(run.policy));
    REQUIRE(loaded.questions.size() == run.questions.size());
    for (std::size_t q = 0; q < run.questions.size(); ++q) {
        REQUIRE(loaded.questions[q].ranked.size() == run.questions[q].ranked.size());
        for (std::size_t i = 0; i < run.questions[q].ranked.size(); ++i) {
            CHECK(loaded.questions[q].ranked[i].probability ==
                  run.questions[q].ranked[i].probability);
        }
    }
    CHECK_THROWS_AS(load_run(tmp.path() / "missing.json"), Error);
}
