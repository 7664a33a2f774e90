#include <doctest.h>

#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "coxql/backend.hpp"
#include "coxql/grammar.hpp"
#include "coxql/parse.hpp"

using namespace coxql;

namespace {

Dataset tiny_test_split() {
    std::string jsonl =
        R"({"question": "What is the prediction for data point number 9130?", "parse": "filter id 9130 and predict"})"
        "\n"
        R"({"question": "Give me the accuracy on the data.", "parse": "score accuracy"})"
        "\n"
        R"({"question": "Top 3 important features for id 3!", "parse": "filter id 3 and nlpattribute topk 3 default"})"
        "\n";
    return parse_dataset(jsonl, Split::Test, "<test>");
}

}  // namespace

TEST_SUITE_BEGIN("backend");

TEST_CASE("config file parsing and typed getters") {
    ConfigMap cfg = ConfigMap::parse(
        "# completion endpoint\n"
        "backend.endpoint = http://localhost:8000/v1/completions\n"
        "backend.model = local-llm   # trailing comment\n"
        "backend.timeout_seconds = 2.5\n"
        "backend.max_concurrency = 4\n"
        "repair.topk_from_question = off\n");
    BackendConfig bc = BackendConfig::from_config(cfg);
    CHECK(bc.endpoint == "http://localhost:8000/v1/completions");
    CHECK(bc.model == "local-llm");
    CHECK(bc.timeout_seconds == doctest::Approx(2.5));
    CHECK(bc.max_concurrency == 4);
    CHECK(bc.api_key_env == "COXQL_API_KEY");
    CHECK(cfg.get_bool("repair.topk_from_question", true) == false);
    CHECK(cfg.get_int("missing", 9) == 9);
}

TEST_CASE("http_complete sends a temperature-zero completion request") {
    httplib::Server server;
    nlohmann::json seen;
    server.Post("/v1/completions", [&](const httplib::Request& req, httplib::Response& res) {
        seen = nlohmann::json::parse(req.body);
        nlohmann::json reply;
        reply["choices"] = {{{"text", "  filter id 3 and show\nextra line"}}};
        res.set_content(reply.dump(), "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread worker([&server] { server.listen_after_bind(); });
    server.wait_until_ready();

    BackendConfig cfg;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/completions";
    cfg.model = "stub";
    std::string text = http_complete(cfg, "parse this", {"\n"}, 32);
    CHECK(text == "filter id 3 and show");
    CHECK(seen["model"] == "stub");
    CHECK(seen["temperature"] == 0);
    CHECK(seen["max_tokens"] == 32);
    CHECK(seen["prompt"] == "parse this");
    CHECK(seen["stop"][0] == "\n");

    server.stop();
    worker.join();
}

TEST_CASE("http errors carry their kind") {
    httplib::Server server;
    server.Post("/fail", [](const httplib::Request&, httplib::Response& res) {
        res.status = 500;
        res.set_content("boom", "text/plain");
    });
    server.Post("/garbled", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("not json", "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread worker([&server] { server.listen_after_bind(); });
    server.wait_until_ready();
    std::string base = "http://127.0.0.1:" + std::to_string(port);

    BackendConfig cfg;
    cfg.endpoint = base + "/fail";
    try {
        http_complete(cfg, "x", {}, 8);
        FAIL("expected HttpStatus");
    } catch (const BackendError& e) {
        CHECK(e.kind == BackendError::Kind::HttpStatus);
        CHECK(e.status == 500);
    }
    cfg.endpoint = base + "/garbled";
    try {
        http_complete(cfg, "x", {}, 8);
        FAIL("expected MalformedResponse");
    } catch (const BackendError& e) {
        CHECK(e.kind == BackendError::Kind::MalformedResponse);
    }

    server.stop();
    worker.join();
}

TEST_CASE("oracle answers the question embedded in the prompt") {
    Dataset test = tiny_test_split();
    OracleBackend oracle(test);
    std::string prompt =
        "Question: Give me the accuracy on the data.\nParse: score accuracy\n\n"
        "Question: What is the prediction for data point number 9130?\nParse:";
    CHECK(oracle.complete(prompt, {}, 0) == "filter id 9130 and predict");

    CHECK_THROWS_AS(oracle.complete("Question: never seen before\nParse:", {}, 0), BackendError);
    try {
        oracle.complete("nothing here", {}, 0);
        FAIL("expected UnmappedQuestion");
    } catch (const BackendError& e) {
        CHECK(e.kind == BackendError::Kind::UnmappedQuestion);
    }
}

TEST_CASE("oracle scoring drives constrained decoding to the gold parse") {
    Dataset test = tiny_test_split();
    OracleBackend oracle(test);
    Grammar grammar = Grammar::build();
    for (const Example& ex : test.examples) {
        std::string prompt = "Question: " + ex.question + "\nParse:";
        REQUIRE(oracle.terminal_scorer() != nullptr);
        std::string out = constrained_decode(*oracle.terminal_scorer(), grammar, prompt);
        CHECK(out == ex.gold_parse);
    }
}

TEST_CASE("corruption transforms match their class definitions") {
    auto corrupt_one = [](CorruptionClass cls, const std::string& gold, std::uint64_t seed = 1) {
        return apply_corruptions(gold, CorruptionProfile::single(cls, seed));
    };

    SUBCASE("slot order swap") {
        CHECK(corrupt_one(CorruptionClass::SlotOrderSwap,
                          "filter id 3 and nlpattribute topk 3 default") ==
              "filter id 3 and nlpattribute default topk 3");
    }
    SUBCASE("default omission") {
        CHECK(corrupt_one(CorruptionClass::DefaultOmission, "score accuracy") == "score");
        CHECK(corrupt_one(CorruptionClass::DefaultOmission,
                          "filter id 2451 and nlpattribute all default") ==
              "filter id 2451 and nlpattribute");
        CHECK(corrupt_one(CorruptionClass::DefaultOmission, "filter id 912 and influence topk 1") ==
              "filter id 912 and influence");
    }
    SUBCASE("extra metric") {
        std::string out = corrupt_one(CorruptionClass::ExtraMetric, "score accuracy");
        CHECK(out.rfind("score accuracy ", 0) == 0);
        std::string extra = out.substr(std::string("score accuracy ").size());
        CHECK(metric_from_token(extra).has_value());
        CHECK(extra != "accuracy");
    }
    SUBCASE("wrong method replaces default only") {
        std::string out = corrupt_one(CorruptionClass::WrongMethodName,
                                      "filter id 3 and nlpattribute all default");
        CHECK((out == "filter id 3 and nlpattribute all lime" ||
               out == "filter id 3 and nlpattribute all attention"));
        CHECK(corrupt_one(CorruptionClass::WrongMethodName,
                          "filter id 3 and nlpattribute all lime") ==
              "filter id 3 and nlpattribute all lime");
    }
    SUBCASE("missing topk keeps the keyword, drops the number") {
        CHECK(corrupt_one(CorruptionClass::MissingTopK,
                          "filter id 3 and nlpattribute topk 3 default") ==
              "filter id 3 and nlpattribute topk default");
        CHECK(corrupt_one(CorruptionClass::MissingTopK, "filter id 912 and influence topk 1") ==
              "filter id 912 and influence topk");
    }
    SUBCASE("missing id drops the filter clause") {
        CHECK(corrupt_one(CorruptionClass::MissingId, "filter id 9130 and predict") == "predict");
        CHECK(corrupt_one(CorruptionClass::MissingId, "countdata") == "countdata");
    }
}

TEST_CASE("corruption is reproducible and call-order independent") {
    Dataset test = tiny_test_split();
    OracleBackend oracle(test);
    CorruptionProfile profile = CorruptionProfile::all(0.7, 42);

    CorruptingBackend a(oracle, profile);
    CorruptingBackend b(oracle, profile);
    std::vector<std::string> prompts;
    for (const Example& ex : test.examples) {
        prompts.push_back("Question: " + ex.question + "\nParse:");
    }
    std::vector<std::string> first;
    for (const std::string& p : prompts) first.push_back(a.complete(p, {}, 0));
    // Reverse order on a fresh backend must give identical per-question texts.
    for (std::size_t i = prompts.size(); i-- > 0;) {
        CHECK(b.complete(prompts[i], {}, 0) == first[i]);
    }
    // Zero rate is the identity.
    CorruptingBackend c(oracle, CorruptionProfile::all(0.0, 42));
    for (std::size_t i = 0; i < prompts.size(); ++i) {
        CHECK(c.complete(prompts[i], {}, 0) == test.examples[i].gold_parse);
    }
}

TEST_CASE("profiles validate rates and round-trip through json") {
    CHECK_THROWS_AS(CorruptionProfile::all(1.5, 0), std::invalid_argument);
    CHECK_THROWS_AS(CorruptionProfile::from_json(R"({"rates": {"nope": 1.0}})"),
                    std::invalid_argument);
    CorruptionProfile p = CorruptionProfile::from_json(
        R"({"seed": 9, "rates": {"missing_id": 1.0, "extra_metric": 0.5}})");
    CHECK(p.seed == 9);
    CHECK(p.rates.at(CorruptionClass::MissingId) == 1.0);
    CorruptionProfile q = CorruptionProfile::from_json(p.to_json());
    CHECK(q.rates == p.rates);
    CHECK(q.seed == p.seed);
}

TEST_SUITE_END();
