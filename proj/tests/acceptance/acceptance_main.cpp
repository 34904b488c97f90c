// Acceptance suite: each criterion prints exactly one [PASS]/[FAIL] line.
// The process exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "legalir/bm25.hpp"
#include "legalir/dataset.hpp"
#include "legalir/evaluation.hpp"
#include "legalir/ngram_lm.hpp"
#include "legalir/pipeline.hpp"
#include "legalir/segmentation.hpp"
#include "legalir/text_normalize.hpp"
#include "../oracles.hpp"
#include "../test_util.hpp"

using namespace legalir;
using Clock = std::chrono::steady_clock;

namespace {

struct Criterion {
    bool ok = true;
    std::string detail;

    void expect(bool cond, const std::string& msg) {
        if (!cond && ok) {
            ok = false;
            detail = msg;
        }
    }
};

int g_failures = 0;

void run_criterion(const std::string& name, const std::function<void(Criterion&)>& body) {
    Criterion c;
    try {
        body(c);
    } catch (const std::exception& e) {
        c.expect(false, std::string("exception: ") + e.what());
    }
    if (c.ok) {
        std::cout << "[PASS] " << name << "\n";
    } else {
        std::cout << "[FAIL] " << name << " -- " << c.detail << "\n";
        ++g_failures;
    }
}

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// ---------------------------------------------------------------------------

void bm25_oracle_equivalence(Criterion& c) {
    auto started = Clock::now();
    std::mt19937 rng(8101);
    for (int iter = 0; iter < 200; ++iter) {
        std::uniform_int_distribution<std::size_t> n_docs(1, 50);
        std::uniform_int_distribution<std::size_t> n_tokens(0, 20);
        std::uniform_int_distribution<int> term(0, 11);

        std::vector<oracle::Doc> docs;
        std::size_t n = n_docs(rng);
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<std::string> tokens;
            std::size_t len = n_tokens(rng);
            for (std::size_t t = 0; t < len; ++t) tokens.push_back("t" + std::to_string(term(rng)));
            docs.emplace_back("d" + std::to_string(i), tokens);
        }
        std::vector<std::pair<std::string, TokenSeq>> prepared;
        for (const auto& [id, tokens] : docs) prepared.emplace_back(id, make_token_seq(tokens));
        Bm25Index index = Bm25Index::build(prepared);

        std::uniform_int_distribution<std::size_t> n_terms(1, 6);
        std::vector<std::string> query;
        std::size_t qn = n_terms(rng);
        for (std::size_t i = 0; i < qn; ++i) query.push_back("t" + std::to_string(term(rng)));

        for (std::size_t i = 0; i < docs.size(); ++i) {
            double expected = oracle::bm25_score(docs, i, query, 1.2, 0.75);
            double actual = index.score(make_token_seq(query), docs[i].first);
            c.expect(std::abs(expected - actual) <= 1e-9,
                     "score mismatch at corpus " + std::to_string(iter));
            if (!c.ok) return;
        }
        auto expected_hits = oracle::bm25_top_k(docs, query, docs.size(), 1.2, 0.75);
        auto actual_hits = index.top_k(make_token_seq(query), docs.size());
        c.expect(expected_hits.size() == actual_hits.size(),
                 "hit count mismatch at corpus " + std::to_string(iter));
        if (!c.ok) return;
        for (std::size_t i = 0; i < expected_hits.size(); ++i) {
            c.expect(expected_hits[i].first == actual_hits[i].doc_id,
                     "ranking mismatch at corpus " + std::to_string(iter));
            c.expect(std::abs(expected_hits[i].second - actual_hits[i].score) <= 1e-9,
                     "hit score mismatch at corpus " + std::to_string(iter));
            if (!c.ok) return;
        }
    }
    double secs = std::chrono::duration<double>(Clock::now() - started).count();
    c.expect(secs < 10.0, "runtime " + std::to_string(secs) + "s exceeds 10s");
}

void f2_formula(Criterion& c) {
    c.expect(std::abs(f_beta(0.5, 1.0, 2.0) - 0.833333) <= 1e-6, "f_beta(0.5, 1, 2)");
    c.expect(std::abs(f_beta(1.0, 0.5, 2.0) - 0.555556) <= 1e-6, "f_beta(1, 0.5, 2)");

    std::vector<Question> gold;
    std::map<std::string, std::set<ArticleRef>> predictions;
    for (int i = 0; i < 7; ++i) {
        Question q;
        q.question_id = "q" + std::to_string(i);
        q.text = "t";
        q.relevant = {{"law" + std::to_string(i % 3), "a" + std::to_string(i)}};
        if (i % 2 == 0) q.relevant.insert({"law9", "extra"});
        predictions[q.question_id] = q.relevant;
        gold.push_back(std::move(q));
    }
    EvalReport report = evaluate_run(predictions, gold);
    c.expect(report.macro_f2 == 1.0, "gold-as-run macro F2 must be exactly 1.0");
    c.expect(report.macro_precision == 1.0 && report.macro_recall == 1.0, "gold-as-run macro P/R");
}

void segmentation_coverage(Criterion& c) {
    std::mt19937 rng(8102);
    std::uniform_int_distribution<std::size_t> len_dist(1, 400);
    std::uniform_int_distribution<std::size_t> window_dist(1, 50);

    for (int iter = 0; iter < 1000; ++iter) {
        std::size_t len = len_dist(rng);
        std::size_t window = window_dist(rng);
        std::size_t stride = std::uniform_int_distribution<std::size_t>(1, window)(rng);

        std::vector<std::string> tokens;
        for (std::size_t i = 0; i < len; ++i) tokens.push_back("w" + std::to_string(i));
        auto passages = segment(make_token_seq(tokens), {window, stride});

        std::vector<bool> covered(len, false);
        for (std::size_t i = 0; i < passages.size(); ++i) {
            c.expect(passages[i].token_offset == i * stride,
                     "offset step mismatch at trial " + std::to_string(iter));
            if (!c.ok) return;
            for (std::size_t t = 0; t < passages[i].tokens.size(); ++t) {
                covered[passages[i].token_offset + t] = true;
            }
        }
        for (std::size_t pos = 0; pos < len; ++pos) {
            c.expect(covered[pos], "uncovered token position at trial " + std::to_string(iter));
            if (!c.ok) return;
        }
    }
}

void lm_normalization(Criterion& c) {
    std::mt19937 rng(8103);
    for (int corpus_idx = 0; corpus_idx < 50; ++corpus_idx) {
        std::uniform_int_distribution<std::size_t> order_dist(1, 4);
        std::uniform_int_distribution<std::size_t> sent_count(3, 15);
        std::uniform_int_distribution<std::size_t> sent_len(1, 8);
        std::uniform_int_distribution<int> term(0, 6);

        NGramLmConfig cfg{order_dist(rng), 0.75, corpus_idx % 3 == 0 ? 2u : 1u};
        std::vector<std::vector<std::string>> sentences;
        std::size_t count = sent_count(rng);
        for (std::size_t i = 0; i < count; ++i) {
            std::vector<std::string> s;
            std::size_t len = sent_len(rng);
            for (std::size_t j = 0; j < len; ++j) s.push_back("v" + std::to_string(term(rng)));
            sentences.push_back(std::move(s));
        }
        std::vector<TokenSeq> seqs;
        for (const auto& s : sentences) seqs.push_back(make_token_seq(s));
        NGramLm lm = NGramLm::train(seqs, cfg);

        for (const auto& ctx : lm.observed_contexts()) {
            double sum = 0.0;
            for (const auto& w : lm.vocab()) sum += lm.conditional(ctx, w);
            c.expect(std::abs(sum - 1.0) <= 1e-9,
                     "context distribution sums to " + std::to_string(sum) + " at corpus " +
                         std::to_string(corpus_idx));
            if (!c.ok) return;
        }

        oracle::NGramOracle ref(sentences, cfg.order, cfg.discount, cfg.unk_threshold);
        for (int s = 0; s < 8; ++s) {
            std::vector<std::string> sentence;
            std::size_t len = sent_len(rng);
            for (std::size_t j = 0; j < len; ++j) {
                sentence.push_back("v" + std::to_string(term(rng) + (s % 2 ? 3 : 0)));
            }
            double expected = std::log(ref.perplexity(sentence));
            double actual = std::log(lm.perplexity(make_token_seq(sentence)));
            c.expect(std::abs(expected - actual) <= 1e-9,
                     "ln PP mismatch at corpus " + std::to_string(corpus_idx));
            if (!c.ok) return;
        }
    }
}

void domain_separation(Criterion& c) {
    auto started = Clock::now();
    int successes = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::mt19937 rng(9000 + trial);
        std::uniform_int_distribution<std::size_t> sent_len(5, 12);
        std::uniform_int_distribution<int> term(0, 99);

        auto make_side = [&](const std::string& prefix, std::size_t count) {
            std::vector<std::vector<std::string>> side;
            for (std::size_t i = 0; i < count; ++i) {
                std::vector<std::string> s;
                std::size_t len = sent_len(rng);
                for (std::size_t j = 0; j < len; ++j) {
                    s.push_back(prefix + std::to_string(term(rng)));
                }
                side.push_back(std::move(s));
            }
            return side;
        };
        auto in_domain = make_side("a", 1000);
        auto out_domain = make_side("b", 1000);

        std::vector<TokenSeq> train_seqs;
        for (std::size_t i = 0; i < 800; ++i) train_seqs.push_back(make_token_seq(in_domain[i]));
        NGramLm lm = NGramLm::train(train_seqs, {3, 0.75, 2});

        std::vector<double> held_out_pp;
        for (std::size_t i = 800; i < 1000; ++i) {
            held_out_pp.push_back(lm.perplexity(make_token_seq(in_domain[i])));
        }
        std::vector<double> out_pp;
        for (const auto& s : out_domain) out_pp.push_back(lm.perplexity(make_token_seq(s)));

        if (median(held_out_pp) < median(out_pp)) ++successes;
    }
    c.expect(successes >= 99,
             "median separation held in only " + std::to_string(successes) + "/100 trials");
    double secs = std::chrono::duration<double>(Clock::now() - started).count();
    c.expect(secs < 30.0, "runtime " + std::to_string(secs) + "s exceeds 30s");
}

void threshold_selection_partition(Criterion& c) {
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
    std::multiset<double> scores;
    for (const auto& r : kept) scores.insert(r.perplexity);
    std::multiset<double> expected = {35.01, 87.62, 99.30, 152.27};
    c.expect(scores == expected, "kept set does not match {35.01, 87.62, 99.30, 152.27}");
}

void pair_generation(Criterion& c) {
    TextPipeline pipeline;
    pipeline.normalization.remove_stopwords = false;

    // 20 questions; question i has its own term family qi_*; its gold article
    // g_i matches strongly, distractors overlap partially, one gold per
    // question is unretrievable (shares no terms).
    std::vector<Article> articles;
    std::vector<Question> questions;
    for (int i = 0; i < 20; ++i) {
        std::string qtag = "q" + std::to_string(i);
        Article gold{"L", "g" + std::to_string(i),
                     qtag + "t0 " + qtag + "t1 " + qtag + "t2 " + qtag + "t3"};
        Article hidden{"L", "h" + std::to_string(i),
                       "hidden" + std::to_string(i) + " vocabulary entirely private"};
        Article near1{"L", "n" + std::to_string(i) + "a",
                      qtag + "t0 " + qtag + "t1 " + qtag + "t2 fillerA fillerB"};
        Article near2{"L", "n" + std::to_string(i) + "b",
                      qtag + "t0 " + qtag + "t1 fillerC fillerD fillerE"};
        articles.insert(articles.end(), {gold, hidden, near1, near2});

        Question q;
        q.question_id = "Q" + std::to_string(i);
        q.text = qtag + "t0 " + qtag + "t1 " + qtag + "t2 " + qtag + "t3";
        q.relevant = {{"L", gold.article_id}, {"L", hidden.article_id}};
        questions.push_back(std::move(q));
    }

    auto tokenized = tokenize_corpus(articles, pipeline);
    auto tokenized_questions = tokenize_questions(questions, pipeline);
    Bm25Index index = build_article_index(tokenized);

    PairGenConfig cfg;
    cfg.top_k = 3;
    cfg.max_question_tokens = 128;
    cfg.segmentation = {3, 2};
    auto pairs = generate_pairs(tokenized_questions, tokenized, index, cfg);

    for (std::size_t qi = 0; qi < questions.size(); ++qi) {
        const Question& q = questions[qi];
        std::set<ArticleRef> positives;
        std::set<ArticleRef> negatives;
        for (const auto& p : pairs) {
            if (p.question_id != q.question_id) continue;
            ArticleRef ref{p.law_id, p.article_id};
            bool is_gold = q.relevant.count(ref) > 0;
            c.expect(p.label == (is_gold ? 1 : 0),
                     "label leakage for " + q.question_id + " on " + p.article_id);
            if (!c.ok) return;
            if (p.label == 1) {
                c.expect(positives.insert(ref).second,
                         "duplicate positive for " + q.question_id);
            } else {
                negatives.insert(ref);
            }
        }
        c.expect(positives == q.relevant, "positives != gold for " + q.question_id);
        c.expect(negatives.size() <= cfg.top_k, "negatives exceed k for " + q.question_id);

        std::set<ArticleRef> top;
        for (const auto& hit : index.top_k(tokenized_questions[qi].tokens, cfg.top_k)) {
            top.insert(parse_article_doc_id(hit.doc_id));
        }
        for (const auto& n : negatives) {
            c.expect(top.count(n) == 1, "negative outside top-k for " + q.question_id);
        }
        if (!c.ok) return;
    }

    // dev split: question-disjoint at 20%
    auto [train, dev] = split_dev(pairs, 0.2, 4242);
    std::set<std::string> train_ids;
    std::set<std::string> dev_ids;
    for (const auto& p : train) train_ids.insert(p.question_id);
    for (const auto& p : dev) dev_ids.insert(p.question_id);
    c.expect(dev_ids.size() == 4, "20 questions at 0.2 must yield 4 dev questions");
    for (const auto& id : dev_ids) {
        c.expect(train_ids.count(id) == 0, "dev question leaked into train: " + id);
    }
    c.expect(train.size() + dev.size() == pairs.size(), "split lost pairs");

    // 520-question rounding check
    std::vector<TrainingPair> big;
    for (int i = 0; i < 520; ++i) {
        big.push_back({"bq" + std::to_string(i), "L", "a", 0, "text", 1});
    }
    auto [big_train, big_dev] = split_dev(big, 0.2, 1);
    c.expect(big_dev.size() == 104, "520 questions at 0.2 must yield 104 dev questions, got " +
                                        std::to_string(big_dev.size()));
}

void pipeline_determinism(Criterion& c) {
    TextPipeline pipeline;
    pipeline.normalization.remove_stopwords = false;

    // Verbatim containment: each question is exactly its article's text; a
    // shared token keeps competitor articles in the candidate pool.
    std::vector<Article> articles;
    std::vector<Question> questions;
    for (int i = 0; i < 10; ++i) {
        std::string tag = "v" + std::to_string(i);
        std::string text = "common";
        for (int t = 0; t < 11; ++t) text += " " + tag + "w" + std::to_string(t);
        articles.push_back({"L", "art" + std::to_string(i), text});

        Question q;
        q.question_id = "Q" + std::to_string(i);
        q.text = text;
        q.relevant = {{"L", "art" + std::to_string(i)}};
        questions.push_back(std::move(q));
    }

    auto tokenized = tokenize_corpus(articles, pipeline);
    auto tokenized_questions = tokenize_questions(questions, pipeline);
    Bm25Index index = build_article_index(tokenized);

    PipelineConfig cfg;
    cfg.k_retrieve = 150;
    cfg.segmentation = {5, 3};
    cfg.selection = TopOnePolicy{};
    BuiltinLexicalScorer scorer;

    RunResult run1 = run_pipeline(tokenized_questions, tokenized, index, cfg, scorer, 1);
    RunResult run2 = run_pipeline(tokenized_questions, tokenized, index, cfg, scorer, 4);

    testutil::TempDir tmp;
    write_submission(run1, tmp.path() / "s1.json");
    write_submission(run2, tmp.path() / "s2.json");
    c.expect(testutil::read_file(tmp.path() / "s1.json") ==
                 testutil::read_file(tmp.path() / "s2.json"),
             "submission files differ between identical runs");

    for (std::size_t qi = 0; qi < questions.size(); ++qi) {
        auto selected = select_relevant(run1.questions[qi].ranked, run1.policy);
        c.expect(selected.size() == 1 &&
                     selected[0] == ArticleRef{"L", "art" + std::to_string(qi)},
                 "top-1 did not select the containing article for Q" + std::to_string(qi));
        if (!c.ok) return;
    }
}

void external_scorer_protocol(Criterion& c) {
    testutil::TempDir tmp;
    auto echo = tmp.write("echo.py", R"PY(
import sys, json
print(json.dumps({"protocol": "legalir-scorer/1", "name": "echo"}), flush=True)
for line in sys.stdin:
    req = json.loads(line)
    print(json.dumps({"pair_id": req["pair_id"], "probability": 0.25}), flush=True)
)PY");

    ExternalProcessScorer scorer("python3 " + echo.string(), 60.0);
    std::vector<ScoreRequest> requests;
    for (int i = 0; i < 1000; ++i) {
        requests.push_back({"p" + std::to_string(i), "question " + std::to_string(i),
                            "passage " + std::to_string(i)});
    }
    auto responses = scorer.score(requests);
    c.expect(responses.size() == 1000, "expected 1000 responses");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < responses.size(); ++i) {
        if (responses[i].pair_id != requests[i].pair_id) {
            c.expect(false, "response order broken at " + std::to_string(i));
            return;
        }
        seen.insert(responses[i].pair_id);
    }
    c.expect(seen.size() == 1000, "pair ids are not bijective");

    auto malformed = tmp.write("malformed.py", R"PY(
import sys, json
print(json.dumps({"protocol": "legalir-scorer/1"}), flush=True)
i = 0
for line in sys.stdin:
    req = json.loads(line)
    i += 1
    if i == 3:
        print("&&& broken line &&&", flush=True)
    else:
        print(json.dumps({"pair_id": req["pair_id"], "probability": 0.5}), flush=True)
)PY");
    ExternalProcessScorer bad("python3 " + malformed.string(), 60.0);
    bool aborted = false;
    std::string message;
    try {
        bad.score(requests);
    } catch (const std::exception& e) {
        aborted = true;
        message = e.what();
    }
    c.expect(aborted, "malformed line did not abort the batch");
    c.expect(message.find("'p2'") != std::string::npos,
             "abort message does not name pair_id p2: " + message);
}

void vote_identity(Criterion& c) {
    std::mt19937 rng(8104);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        RunResult run;
        run.provenance.scorer_name = "trial" + std::to_string(trial);
        run.policy = trial % 2 == 0 ? SelectionPolicy{TopOnePolicy{}}
                                    : SelectionPolicy{ThresholdPolicy{unit(rng)}};
        std::size_t n_questions = 1 + rng() % 5;
        for (std::size_t q = 0; q < n_questions; ++q) {
            QuestionResult qr;
            qr.question_id = "Q" + std::to_string(q);
            std::size_t n_articles = 1 + rng() % 7;
            for (std::size_t a = 0; a < n_articles; ++a) {
                qr.ranked.push_back({"law" + std::to_string(a % 3),
                                     "art" + std::to_string(a), unit(rng)});
            }
            std::sort(qr.ranked.begin(), qr.ranked.end(), [](const auto& x, const auto& y) {
                if (x.probability != y.probability) return x.probability > y.probability;
                return ArticleRef{x.law_id, x.article_id} < ArticleRef{y.law_id, y.article_id};
            });
            run.questions.push_back(std::move(qr));
        }

        RunResult voted = vote({run});
        c.expect(voted.questions.size() == run.questions.size(), "question count changed");
        for (std::size_t q = 0; q < run.questions.size(); ++q) {
            auto original = select_relevant(run.questions[q].ranked, run.policy);
            auto combined = select_relevant(voted.questions[q].ranked, voted.policy);
            c.expect(original == combined,
                     "selections changed under single-run vote at trial " + std::to_string(trial));
            if (!c.ok) return;
        }
    }
}

}  // namespace

int main() {
    std::cout << "acceptance: paper-scale score reproduction is out of scope; "
                 "criteria are property-based\n";

    run_criterion("bm25 oracle equivalence (200 corpora, 1e-9, <10s)", bm25_oracle_equivalence);
    run_criterion("f2 formula constants and gold-as-run macro", f2_formula);
    run_criterion("segmentation coverage (1000 random triples)", segmentation_coverage);
    run_criterion("lm normalization + brute-force perplexity (50 corpora)", lm_normalization);
    run_criterion("domain separation (>=99/100 seeded trials, <30s)", domain_separation);
    run_criterion("threshold selection reproduces the documented partition",
                  threshold_selection_partition);
    run_criterion("pair generation: leakage-free, negatives within top-k, 104/520 split",
                  pair_generation);
    run_criterion("pipeline determinism and verbatim-containment top-1", pipeline_determinism);
    run_criterion("external scorer protocol (1000-pair bijection, malformed abort)",
                  external_scorer_protocol);
    run_criterion("vote identity on 50 random runs", vote_identity);

    if (g_failures > 0) {
        std::cout << g_failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all criteria passed\n";
    return 0;
}
