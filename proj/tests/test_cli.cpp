#include <sys/wait.h>

#include <cstdlib>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "test_util.hpp"

// End-to-end checks against the installed command surface. Every invocation
// runs the real binary in a scratch directory.

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CmdResult {
    int exit_code = -1;
    std::string stderr_text;
};

CmdResult run_cli(const testutil::TempDir& tmp, const std::string& args) {
    fs::path err = tmp.path() / "stderr.txt";
    std::string cmd = std::string(LEGALIR_CLI_PATH) + " " + args + " 2>" + err.string();
    int rc = std::system(cmd.c_str());
    CmdResult out;
    out.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    out.stderr_text = testutil::read_file(err);
    return out;
}

std::string corpus_json() {
    json laws = json::array();
    laws.push_back(
        {{"id", "45/2019"},
         {"articles",
          {{{"id", "1"}, {"text", "người lao động có quyền đơn phương chấm dứt hợp đồng"}},
           {{"id", "2"}, {"text", "hợp đồng lao động phải được giao kết bằng văn bản"}},
           {{"id", "3"}, {"text", "tiền lương trả cho người lao động theo thỏa thuận"}}}}});
    laws.push_back({{"id", "100/2015"},
                    {"articles",
                     {{{"id", "1"}, {"text", "người phạm tội trong tình trạng say rượu"}},
                      {{"id", "2"}, {"text", "tòa án nhân dân xét xử công khai"}}}}});
    return laws.dump();
}

std::string questions_json() {
    json qs = json::array();
    qs.push_back({{"question_id", "q1"},
                  {"text", "hợp đồng lao động giao kết bằng văn bản"},
                  {"relevant_articles", {{{"law_id", "45/2019"}, {"article_id", "2"}}}}});
    qs.push_back({{"question_id", "q2"},
                  {"text", "tòa án xét xử công khai"},
                  {"relevant_articles", {{{"law_id", "100/2015"}, {"article_id", "2"}}}},
                  {"answer", "xét xử công khai"}});
    return qs.dump();
}

json read_json(const fs::path& p) { return json::parse(testutil::read_file(p)); }

}  // namespace

TEST_CASE("cli: build-index then search finds the obvious article") {
    testutil::TempDir tmp;
    auto corpus = tmp.write("corpus.json", corpus_json());
    fs::path out = tmp.path() / "out";

    auto r = run_cli(tmp, "build-index --corpus " + corpus.string() + " --out " + out.string());
    REQUIRE_MESSAGE(r.exit_code == 0, r.stderr_text);
    CHECK(fs::exists(out / "index.json"));
    CHECK(fs::exists(out / "summary.json"));
    CHECK(fs::exists(out / "effective_config.json"));
    CHECK(read_json(out / "summary.json")["counts"]["documents"] == 5);

    fs::path out2 = tmp.path() / "out2";
    r = run_cli(tmp, "search --index " + (out / "index.json").string() +
                         " --query \"tòa án xét xử công khai\" --k 3 --out " + out2.string());
    REQUIRE_MESSAGE(r.exit_code == 0, r.stderr_text);
    std::string hits = testutil::read_file(out2 / "hits.jsonl");
    REQUIRE(!hits.empty());
    json top = json::parse(hits.substr(0, hits.find('\n')));
    CHECK(top["law_id"] == "100/2015");
    CHECK(top["article_id"] == "2");
    CHECK(top["rank"] == 1);
}

TEST_CASE("cli: gen-pairs then split stays question-disjoint") {
    testutil::TempDir tmp;
    auto corpus = tmp.write("corpus.json", corpus_json());
    auto questions = tmp.write("questions.json", questions_json());
    fs::path out = tmp.path() / "pairs";

    auto r = run_cli(tmp, "gen-pairs --corpus " + corpus.string() + " --questions " +
                              questions.string() + " --k 3 --window 6 --stride 3 --out " +
                              out.string());
    REQUIRE_MESSAGE(r.exit_code == 0, r.stderr_text);
    json summary = read_json(out / "summary.json");
    CHECK(summary["counts"]["positives"] == 2);  // one gold per question
    CHECK(summary["counts"]["pairs"].get<int>() >= 2);

    fs::path split_out = tmp.path() / "split";
    r = run_cli(tmp, "split --pairs " + (out / "pairs.jsonl").string() +
                         " --fraction 0.5 --seed 7 --out " + split_out.string());
    REQUIRE_MESSAGE(r.exit_code == 0, r.stderr_text);
    json split_summary = read_json(split_out / "summary.json");
    CHECK(split_summary["counts"]["dev_questions"] == 1);
    CHECK(split_summary["counts"]["train_questions"] == 1);
}

TEST_CASE("cli: evaluate scores gold-as-run at exactly 1") {
    testutil::TempDir tmp;
    auto questions = tmp.write("questions.json", questions_json());
    // submission = the gold itself
    json sub = json::array();
    sub.push_back({{"question_id", "q1"},
                   {"relevant_articles", {{{"law_id", "45/2019"}, {"article_id", "2"}}}}});
    sub.push_back({{"question_id", "q2"},
                   {"relevant_articles", {{{"law_id", "100/2015"}, {"article_id", "2"}}}}});
    auto submission = tmp.write("submission.json", sub.dump());

    fs::path out = tmp.path() / "eval";
    auto r = run_cli(tmp, "evaluate --submission " + submission.string() + " --questions " +
                              questions.string() + " --out " + out.string());
    REQUIRE_MESSAGE(r.exit_code == 0, r.stderr_text);
    json report = read_json(out / "report.json");
    CHECK(report["macro"]["f2"] == 1.0);
    CHECK(report["macro"]["precision"] == 1.0);
    CHECK(fs::exists(out / "report.txt"));
}

TEST_CASE("cli: select-indomain filters a pre-scored TSV at the threshold") {
    testutil::TempDir tmp;
    std::string tsv =
        "277.18\tChây ì nộp phạt nguội.\n"
        "3383.04\tNếu chồng chị muốn theo em thì chị cho đi luôn.\n"
        "404.96\tTrong khi Tư khai không dùng số điện thoại này.\n"
        "35.01\tNếu bị cáo trốn thì HĐXX tạm đình chỉ vụ án và yêu cầu CQĐT truy nã bị cáo.\n"
        "87.62\tBên cạnh đó, Thông tư 64/2017 cũng sửa đổi, bổ sung nội dung.\n"
        "1322.54\tThị trấn biển Italia giao bán nhà với giá 1 USD.\n"
        "99.30\tHai bên đã ký hợp đồng công chứng.\n"
        "152.27\tÔng Kính, bà Liễu, bà Thơm có yêu cầu bồi thường thiệt hại.\n";
    auto scores = tmp.write("scored.tsv", tsv);
    fs::path out = tmp.path() / "sel";

    auto r = run_cli(tmp, "select-indomain --scores " + scores.string() +
                              " --threshold 200 --out " + out.string());
    REQUIRE_MESSAGE(r.exit_code == 0, r.stderr_text);
    json summary = read_json(out / "summary.json");
    CHECK(summary["counts"]["read"] == 8);
    CHECK(summary["counts"]["kept"] == 4);

    std::string selected = testutil::read_file(out / "selected.tsv");
    CHECK(selected.find("35.01") != std::string::npos);
    CHECK(selected.find("87.62") != std::string::npos);
    CHECK(selected.find("99.30") != std::string::npos);
    CHECK(selected.find("152.27") != std::string::npos);
    CHECK(selected.find("277.18") == std::string::npos);
    CHECK(selected.find("3383.04") == std::string::npos);
}

TEST_CASE("cli: build-lm, ppl and model-based selection") {
    testutil::TempDir tmp;
    std::string sentences;
    for (int i = 0; i < 30; ++i) {
        sentences += "hợp đồng lao động được giao kết bằng văn bản\n";
        sentences += "người lao động có quyền chấm dứt hợp đồng\n";
    }
    auto input = tmp.write("sentences.txt", sentences);

    fs::path lm_out = tmp.path() / "lm";
    auto r = run_cli(tmp, "build-lm --in " + input.string() + " --order 2 --out " + lm_out.string());
    REQUIRE_MESSAGE(r.exit_code == 0, r.stderr_text);
    REQUIRE(fs::exists(lm_out / "model.lm"));

    auto eval_input = tmp.write("eval.txt",
                                "hợp đồng lao động được giao kết bằng văn bản\n"
                                "từ vựng hoàn toàn khác biệt nơi đây\n");
    fs::path ppl_out = tmp.path() / "ppl";
    r = run_cli(tmp, "ppl --model " + (lm_out / "model.lm").string() + " --in " +
                         eval_input.string() + " --out " + ppl_out.string());
    REQUIRE_MESSAGE(r.exit_code == 0, r.stderr_text);
    std::string scored = testutil::read_file(ppl_out / "scored.tsv");
    // both lines scored; the in-domain one scores lower
    auto newline = scored.find('\n');
    double first = std::stod(scored.substr(0, scored.find('\t')));
    double second = std::stod(scored.substr(newline + 1, scored.find('\t', newline + 1)));
    CHECK(first < second);

    fs::path sel_out = tmp.path() / "sel";
    r = run_cli(tmp, "select-indomain --model " + (lm_out / "model.lm").string() + " --in " +
                         eval_input.string() + " --threshold " + std::to_string(first + 1.0) +
                         " --out " + sel_out.string());
    REQUIRE_MESSAGE(r.exit_code == 0, r.stderr_text);
    CHECK(read_json(sel_out / "summary.json")["counts"]["kept"] == 1);
}

TEST_CASE("cli: run-pipeline produces byte-identical submissions") {
    testutil::TempDir tmp;
    auto corpus = tmp.write("corpus.json", corpus_json());
    auto questions = tmp.write("questions.json", questions_json());

    fs::path out1 = tmp.path() / "r1";
    fs::path out2 = tmp.path() / "r2";
    std::string args = "run-pipeline --corpus " + corpus.string() + " --questions " +
                       questions.string() + " --window 6 --stride 3 --k-retrieve 10 --out ";
    auto r = run_cli(tmp, args + out1.string());
    REQUIRE_MESSAGE(r.exit_code == 0, r.stderr_text);
    r = run_cli(tmp, args + out2.string());
    REQUIRE_MESSAGE(r.exit_code == 0, r.stderr_text);

    CHECK(testutil::read_file(out1 / "submission.json") ==
          testutil::read_file(out2 / "submission.json"));
    CHECK(testutil::read_file(out1 / "run.json") == testutil::read_file(out2 / "run.json"));
    CHECK(fs::exists(out1 / "submission.json.meta.json"));

    SUBCASE("vote over the single run keeps its selections") {
        fs::path vote_out = tmp.path() / "vote";
        r = run_cli(tmp, "vote --run " + (out1 / "run.json").string() + " --out " +
                             vote_out.string());
        REQUIRE_MESSAGE(r.exit_code == 0, r.stderr_text);
        CHECK(read_json(vote_out / "submission.json") == read_json(out1 / "submission.json"));
    }

    SUBCASE("the submission evaluates cleanly against the gold") {
        fs::path eval_out = tmp.path() / "eval";
        r = run_cli(tmp, "evaluate --submission " + (out1 / "submission.json").string() +
                             " --questions " + questions.string() + " --out " + eval_out.string());
        REQUIRE_MESSAGE(r.exit_code == 0, r.stderr_text);
        json report = read_json(eval_out / "report.json");
        CHECK(report["macro"]["f2"].get<double>() >= 0.0);
        CHECK(report["macro"]["f2"].get<double>() <= 1.0);
    }
}

TEST_CASE("cli: filter-qa reports drop reasons") {
    testutil::TempDir tmp;
    json qs = json::array();
    qs.push_back({{"question_id", "keep"}, {"text", "t"}, {"answer", "có"}});
    qs.push_back({{"question_id", "idlist"}, {"text", "t"}, {"answer", "Điều 123, Điều 168"}});
    std::string long_answer;
    for (int i = 0; i < 60; ++i) long_answer += "từ ";
    qs.push_back({{"question_id", "long"}, {"text", "t"}, {"answer", long_answer}});
    auto questions = tmp.write("qa.json", qs.dump());

    fs::path out = tmp.path() / "qa";
    auto r = run_cli(tmp, "filter-qa --questions " + questions.string() + " --out " + out.string());
    REQUIRE_MESSAGE(r.exit_code == 0, r.stderr_text);
    json summary = read_json(out / "summary.json");
    CHECK(summary["counts"]["kept"] == 1);
    CHECK(summary["counts"]["dropped_long_answer"] == 1);
    CHECK(summary["counts"]["dropped_article_id_list"] == 1);
    json filtered = read_json(out / "filtered_questions.json");
    REQUIRE(filtered.size() == 1);
    CHECK(filtered[0]["question_id"] == "keep");
}

TEST_CASE("cli: normalize applies the shipped data files") {
    testutil::TempDir tmp;
    auto input = tmp.write("in.txt", "Toà án xét xử vụ HĐXX.\noà\n");
    fs::path out = tmp.path() / "norm";
    std::string data = LEGALIR_SOURCE_DIR "/data";

    auto r = run_cli(tmp, "normalize --in " + input.string() + " --accent-map " + data +
                              "/accent_map.tsv --abbrev-map " + data + "/abbrev_map.tsv --out " +
                              out.string());
    REQUIRE_MESSAGE(r.exit_code == 0, r.stderr_text);
    std::string text = testutil::read_file(out / "normalized.txt");
    CHECK(text == "tòa án xét xử vụ hội đồng xét xử\nòa\n");
}

TEST_CASE("cli: config file semantics") {
    testutil::TempDir tmp;
    auto corpus = tmp.write("corpus.json", corpus_json());

    SUBCASE("unknown keys are rejected before any work") {
        auto config = tmp.write("bad.json", R"({"segmentation": {"widnow": 5}})");
        fs::path out = tmp.path() / "cfg";
        auto r = run_cli(tmp, "segment --config " + config.string() + " --corpus " +
                                  corpus.string() + " --out " + out.string());
        CHECK(r.exit_code != 0);
        CHECK(r.stderr_text.find("widnow") != std::string::npos);
        CHECK_FALSE(fs::exists(out / "passages.jsonl"));
    }
    SUBCASE("missing config paths are rejected") {
        auto config = tmp.write("missing.json", R"({"paths": {"corpus": "/no/such/file.json"}})");
        auto r = run_cli(tmp, "segment --config " + config.string() + " --out " +
                                  (tmp.path() / "x").string());
        CHECK(r.exit_code != 0);
        CHECK(r.stderr_text.find("/no/such/file.json") != std::string::npos);
    }
    SUBCASE("explicit flags override config values") {
        auto config = tmp.write("cfg.json", R"({"segmentation": {"window": 4, "stride": 2}})");
        fs::path out = tmp.path() / "cfg2";
        auto r = run_cli(tmp, "segment --config " + config.string() + " --corpus " +
                                  corpus.string() + " --window 6 --stride 3 --out " + out.string());
        REQUIRE_MESSAGE(r.exit_code == 0, r.stderr_text);
        json effective = read_json(out / "effective_config.json");
        CHECK(effective["segmentation"]["window"] == 6);
        CHECK(effective["segmentation"]["stride"] == 3);
    }
}

TEST_CASE("cli: failures remove partial outputs") {
    testutil::TempDir tmp;
    auto corpus = tmp.write("corpus.json", corpus_json());
    // question referencing a nonexistent article
    json qs = json::array();
    qs.push_back({{"question_id", "q1"},
                  {"text", "whatever"},
                  {"relevant_articles", {{{"law_id", "nope"}, {"article_id", "0"}}}}});
    auto questions = tmp.write("questions.json", qs.dump());

    fs::path out = tmp.path() / "fail";
    auto r = run_cli(tmp, "gen-pairs --corpus " + corpus.string() + " --questions " +
                              questions.string() + " --out " + out.string());
    CHECK(r.exit_code != 0);
    CHECK(r.stderr_text.find("dangling") != std::string::npos);
    CHECK_FALSE(fs::exists(out / "pairs.jsonl"));
    CHECK_FALSE(fs::exists(out / "summary.json"));
    CHECK_FALSE(fs::exists(out / "effective_config.json"));
}

TEST_CASE("cli: LEGALIR_OUT overrides the output dir unless --out is given") {
    testutil::TempDir tmp;
    auto input = tmp.write("in.txt", "Hello World\n");

    fs::path env_out = tmp.path() / "from-env";
    fs::path err = tmp.path() / "stderr.txt";
    std::string cmd = "LEGALIR_OUT=" + env_out.string() + " " + LEGALIR_CLI_PATH +
                      " normalize --in " + input.string() + " 2>" + err.string();
    int rc = std::system(cmd.c_str());
    REQUIRE_MESSAGE(WEXITSTATUS(rc) == 0, testutil::read_file(err));
    CHECK(fs::exists(env_out / "normalized.txt"));

    fs::path flag_out = tmp.path() / "from-flag";
    cmd = "LEGALIR_OUT=" + (tmp.path() / "ignored").string() + " " + LEGALIR_CLI_PATH +
          " normalize --in " + input.string() + " --out " + flag_out.string() + " 2>" +
          err.string();
    rc = std::system(cmd.c_str());
    REQUIRE_MESSAGE(WEXITSTATUS(rc) == 0, testutil::read_file(err));
    CHECK(fs::exists(flag_out / "normalized.txt"));
    CHECK_FALSE(fs::exists(tmp.path() / "ignored"));
}

TEST_CASE("cli: bad invocations exit nonzero with a diagnostic") {
    testutil::TempDir tmp;
    auto r = run_cli(tmp, "gen-pairs --out " + (tmp.path() / "x").string());
    CHECK(r.exit_code != 0);
    CHECK(!r.stderr_text.empty());

    r = run_cli(tmp, "no-such-command");
    CHECK(r.exit_code != 0);
}
