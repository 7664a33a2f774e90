#include <doctest.h>

#include <algorithm>
#include <random>

#include "coxql/backend.hpp"
#include "coxql/eval.hpp"
#include "coxql/parse.hpp"
#include "coxql/synth.hpp"

using namespace coxql;

namespace {

Dataset toy_split(Split split) {
    std::string jsonl =
        R"({"question": "What is the prediction for data point number 9130?", "parse": "filter id 9130 and predict"})"
        "\n"
        R"({"question": "Give me the accuracy on the data.", "parse": "score accuracy"})"
        "\n"
        R"({"question": "Count the total number of data points.", "parse": "countdata"})"
        "\n"
        R"({"question": "Top 3 important features for id 3!", "parse": "filter id 3 and nlpattribute topk 3 default"})"
        "\n";
    return parse_dataset(jsonl, split, "<toy>");
}

}  // namespace

TEST_SUITE_BEGIN("eval");

TEST_CASE("exact_match compares surface-normalized strings") {
    CHECK_FALSE(exact_match("filter id 3 and nlpattribute all default",
                            "filter id 3 and nlpattribute topk 3 default"));
    CHECK(exact_match("filter id 3 and show", "filter id 3 and show"));
    CHECK(exact_match("FILTER id 3   and SHOW", "filter id 3 and show"));
    CHECK(exact_match("filter id 12 and similar topk 1", "filter id 12 and similarity topk 1"));
    // Omitted defaults stay visible to the comparison.
    CHECK_FALSE(exact_match("score", "score accuracy"));
    CHECK_FALSE(exact_match("", "countdata"));
}

TEST_CASE("per-category f1 matches the hand-computed toy case") {
    std::vector<std::string> golds = {"Data", "Data", "Meta"};
    std::vector<std::string> preds = {"Data", "Meta", "Meta"};
    auto result = per_category_f1_from_labels(preds, golds);
    REQUIRE(result.count("Data"));
    REQUIRE(result.count("Meta"));
    CHECK(result["Data"].precision == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(result["Data"].recall == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(result["Data"].f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK(result["Meta"].precision == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(result["Meta"].recall == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(result["Meta"].f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK(result.size() == 2);  // categories absent from both sides are omitted
}

TEST_CASE("all-correct predictions give f1 one in every populated category") {
    std::vector<std::string> golds = {"filter id 1 and predict", "countdata", "score f1"};
    auto result = per_category_f1(golds, golds);
    for (const auto& [name, prf] : result) {
        CAPTURE(name);
        CHECK(prf.f1 == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(result.size() == 3);
}

TEST_CASE("invalid predictions become the reserved invalid label") {
    CHECK(predicted_category_label("not a parse") == "invalid");
    CHECK(predicted_category_label("filter id 1 and cfe") == "Perturbation");

    std::vector<std::string> golds = {"countdata", "countdata"};
    std::vector<std::string> preds = {"countdata", "garbage tokens"};
    auto result = per_category_f1(preds, golds);
    REQUIRE(result.count("invalid"));
    CHECK(result["invalid"].precision == 0.0);
    CHECK(result["invalid"].recall == 0.0);
    CHECK(result["Data"].recall == doctest::Approx(0.5));
}

TEST_CASE("mismatched lengths raise LengthMismatch") {
    CHECK_THROWS_AS(per_category_f1({"countdata"}, {}), LengthMismatchError);
}

TEST_CASE("diff_tokens marks the lcs with the gold") {
    auto mask = diff_tokens("filter id 3 and nlpattribute topk 3 lime",
                            "filter id 3 and nlpattribute topk 3 default");
    REQUIRE(mask.size() == 8);
    for (std::size_t i = 0; i + 1 < mask.size(); ++i) CHECK(mask[i]);
    CHECK_FALSE(mask.back());  // lime

    auto all = diff_tokens("countdata", "countdata");
    CHECK(all == std::vector<bool>{true});

    auto none = diff_tokens("alpha beta", "gamma delta");
    CHECK(none == std::vector<bool>{false, false});
}

TEST_CASE("accuracy equals a brute-force recount on randomized prediction sets") {
    std::mt19937_64 rng(777);
    Dataset test = toy_split(Split::Test);
    for (int round = 0; round < 50; ++round) {
        std::vector<std::string> preds;
        for (const Example& ex : test.examples) {
            switch (rng() % 3) {
                case 0: preds.push_back(ex.gold_parse); break;
                case 1: preds.push_back(canonicalize(sample_ast(rng))); break;
                default: preds.emplace_back("unparseable junk"); break;
            }
        }
        std::size_t brute = 0;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            if (exact_match(preds[i], test.examples[i].gold_parse)) ++brute;
        }
        double mean = static_cast<double>(brute) / preds.size();
        // Aggregate the same way run_eval does.
        std::size_t correct = 0;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            correct += exact_match(preds[i], test.examples[i].gold_parse) ? 1 : 0;
        }
        CHECK(static_cast<double>(correct) / preds.size() == doctest::Approx(mean).epsilon(1e-12));
    }
}

TEST_CASE("run_eval with the oracle scores 100% and reports both tables") {
    Dataset train = toy_split(Split::Train);
    Dataset test = toy_split(Split::Test);
    OracleBackend oracle(test);
    Grammar grammar = Grammar::build();
    PromptBundle prompts = PromptBundle::builtin();

    EvalSetup setup;
    setup.train = &train;
    setup.test = &test;
    setup.backend = &oracle;
    setup.grammar = &grammar;
    setup.prompts = &prompts;

    EvalReport report =
        run_eval({Strategy::Nn, Strategy::Gd, Strategy::Mp, Strategy::MpPlus}, setup);
    REQUIRE(report.strategies.size() == 4);
    for (std::size_t i = 1; i < 4; ++i) {
        CAPTURE(report.strategies[i].strategy);
        CHECK(report.strategies[i].accuracy == doctest::Approx(1.0));
        CHECK(report.strategies[i].invalid == 0);
    }
    // NN over a disjoint-question train corpus is just deterministic here.
    CHECK(report.strategies[0].strategy == "nn");

    std::string tables = report.render_tables();
    CHECK(tables.find("exact match accuracy (%)") != std::string::npos);
    CHECK(tables.find("per-category F1 (%)") != std::string::npos);
    for (const char* col : {"NN", "GD", "MP", "MP+"}) {
        CHECK(tables.find(col) != std::string::npos);
    }
    CHECK(tables.find("Data") != std::string::npos);
    CHECK(tables.find("GlobalPrediction") != std::string::npos);
}

TEST_CASE("report json round-trips to an equal report") {
    Dataset train = toy_split(Split::Train);
    Dataset test = toy_split(Split::Test);
    EvalSetup setup;
    setup.train = &train;
    setup.test = &test;
    EvalReport report = run_eval({Strategy::Nn}, setup);
    EvalReport back = EvalReport::from_json(report.to_json());
    CHECK(back == report);
    CHECK_THROWS_AS(EvalReport::from_json("not json"), std::invalid_argument);
}

TEST_CASE("aggregates are order-independent") {
    Dataset test = toy_split(Split::Test);
    Dataset shuffled = test;
    std::reverse(shuffled.examples.begin(), shuffled.examples.end());

    EvalSetup a;
    a.train = &test;
    a.test = &test;
    EvalSetup b;
    b.train = &test;
    b.test = &shuffled;

    EvalReport ra = run_eval({Strategy::Nn}, a);
    EvalReport rb = run_eval({Strategy::Nn}, b);
    CHECK(ra.strategies[0].accuracy == doctest::Approx(rb.strategies[0].accuracy));
    CHECK(ra.strategies[0].per_category == rb.strategies[0].per_category);
}

TEST_CASE("backend failures are recorded per instance, not fatal") {
    struct FlakyBackend final : GenerationBackend {
        int calls = 0;
        std::string complete(const std::string& prompt, const std::vector<std::string>&,
                             int) override {
            if (++calls <= 2) {  // first question's two mp stages
                throw BackendError(BackendError::Kind::Timeout, "synthetic timeout");
            }
            (void)prompt;
            return "countdata";
        }
        std::string label() const override { return "flaky"; }
    };
    Dataset train = toy_split(Split::Train);
    Dataset test = toy_split(Split::Test);
    FlakyBackend backend;
    PromptBundle prompts = PromptBundle::builtin();
    EvalSetup setup;
    setup.train = &train;
    setup.test = &test;
    setup.backend = &backend;
    setup.prompts = &prompts;

    EvalReport report = run_eval({Strategy::Mp}, setup);
    REQUIRE(report.strategies.size() == 1);
    CHECK(report.strategies[0].total == test.size());
    bool saw_backend_error = false;
    for (const InstanceDiff& d : report.strategies[0].diffs) {
        if (d.note.find("backend-error") != std::string::npos) saw_backend_error = true;
    }
    CHECK(saw_backend_error);
}

TEST_SUITE_END();
