#include <doctest.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "coxql/dataset.hpp"
#include "coxql/retrieval.hpp"

using namespace coxql;

namespace {

Dataset make_corpus(const std::vector<std::pair<std::string, std::string>>& records) {
    std::string jsonl;
    for (const auto& [q, p] : records) {
        jsonl += nlohmann::json{{"question", q}, {"parse", p}}.dump();
        jsonl += '\n';
    }
    return parse_dataset(jsonl, Split::Train, "<test>");
}

// Independent trigram cosine for cross-checking the embedder path.
double reference_cosine(const std::string& a, const std::string& b) {
    auto grams = [](const std::string& text) {
        std::string norm = " ";
        bool space = true;
        for (char c : text) {
            if (std::isspace(static_cast<unsigned char>(c))) {
                if (!space) norm += ' ';
                space = true;
            } else {
                norm += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
                space = false;
            }
        }
        if (!space) norm += ' ';
        std::map<std::string, double> counts;
        for (std::size_t i = 0; i + 3 <= norm.size(); ++i) ++counts[norm.substr(i, 3)];
        return counts;
    };
    auto ga = grams(a), gb = grams(b);
    double dot = 0, na = 0, nb = 0;
    for (const auto& [g, c] : ga) {
        na += c * c;
        auto it = gb.find(g);
        if (it != gb.end()) dot += c * it->second;
    }
    for (const auto& [g, c] : gb) nb += c * c;
    if (na == 0 || nb == 0) return 0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

TEST_SUITE_BEGIN("retrieval");

TEST_CASE("cosine identities") {
    const LexicalEmbedder& emb = default_embedder();
    EmbeddingVector a = emb.embed("What is the prediction for id 5?");
    CHECK(cosine(a, a) == doctest::Approx(1.0).epsilon(1e-9));
    EmbeddingVector b = emb.embed("Count the data.");
    CHECK(cosine(a, b) == doctest::Approx(cosine(b, a)).epsilon(1e-12));
    CHECK(cosine(a, b) >= 0.0);
    CHECK(cosine(a, b) < 1.0);
}

TEST_CASE("empty text embeds to a flagged zero vector") {
    EmbeddingVector v = default_embedder().embed("");
    CHECK(v.empty_input);
    CHECK(v.norm == 0.0);
    CHECK(cosine(v, v) == 0.0);
}

TEST_CASE("embedding is deterministic") {
    const LexicalEmbedder& emb = default_embedder();
    EmbeddingVector a = emb.embed("predict id 5");
    EmbeddingVector b = emb.embed("predict id 5");
    CHECK(a.values == b.values);
}

TEST_CASE("related texts score above unrelated ones") {
    const LexicalEmbedder& emb = default_embedder();
    EmbeddingVector query = emb.embed("predict id 5");
    double related = cosine(query, emb.embed("prediction for id 5"));
    double unrelated = cosine(query, emb.embed("unrelated zebra text"));
    CHECK(unrelated < related);
    // Cross-check both values against an independent computation.
    CHECK(related ==
          doctest::Approx(reference_cosine("predict id 5", "prediction for id 5")).epsilon(1e-9));
    CHECK(unrelated ==
          doctest::Approx(reference_cosine("predict id 5", "unrelated zebra text")).epsilon(1e-9));
}

TEST_CASE("ranking is invariant under vector scaling") {
    EmbeddingVector a = default_embedder().embed("show me the data");
    EmbeddingVector b = a;
    for (float& v : b.values) v *= 7.5f;
    b.norm = a.norm * 7.5;
    EmbeddingVector q = default_embedder().embed("show data");
    CHECK(cosine(q, a) == doctest::Approx(cosine(q, b)).epsilon(1e-9));
}

TEST_CASE("nearest ranks a verbatim match first with similarity 1") {
    Dataset corpus = make_corpus({
        {"Count the total number of data points.", "countdata"},
        {"What is the prediction for id 5?", "filter id 5 and predict"},
        {"Please show what the gold labels are.", "label"},
    });
    auto ranked = nearest("What is the prediction for id 5?", corpus, 2);
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0].example->gold_parse == "filter id 5 and predict");
    CHECK(ranked[0].similarity == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("k larger than the corpus clamps without error") {
    Dataset corpus = make_corpus({{"a question", "countdata"}, {"another question", "label"}});
    CHECK(nearest("a question", corpus, 50).size() == 2);
    CHECK(select_demonstrations("a question", corpus, 20).size() == 2);
}

TEST_CASE("empty corpus raises EmptyCorpus") {
    Dataset corpus;
    CHECK_THROWS_AS(nearest("q", corpus, 1), EmptyCorpusError);
}

TEST_CASE("ranking is identical under corpus permutation") {
    std::vector<std::pair<std::string, std::string>> records = {
        {"Count the total number of data points.", "countdata"},
        {"How many examples are there?", "countdata"},
        {"What is the prediction for id 5?", "filter id 5 and predict"},
        {"Show me data point 7.", "filter id 7 and show"},
        {"Please show what the gold labels are.", "label"},
        {"Which labels exist in the data?", "label"},
    };
    Dataset corpus = make_corpus(records);
    std::reverse(records.begin(), records.end());
    Dataset reversed = make_corpus(records);

    auto a = nearest("how many data points are there", corpus, records.size());
    auto b = nearest("how many data points are there", reversed, records.size());
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].example->question == b[i].example->question);
        CHECK(a[i].similarity == doctest::Approx(b[i].similarity).epsilon(1e-12));
    }
}

TEST_CASE("nn_parse returns the nearest gold parse deterministically") {
    Dataset corpus = make_corpus({
        {"Count the total number of data points.", "countdata"},
        {"What is the prediction for id 5?", "filter id 5 and predict"},
    });
    CHECK(nn_parse("What is the prediction for id 5?", corpus) == "filter id 5 and predict");
    CHECK(nn_parse("count all the data points", corpus) ==
          nn_parse("count all the data points", corpus));
}

TEST_CASE("paraphrases of a question surface as top demonstrations") {
    // Three paraphrases of the query among twenty distractors.
    std::vector<std::pair<std::string, std::string>> records = {
        {"Tell me the amount of data the model predicts falsely.", "mistake count"},
        {"Can you demonstrate how many data points are predicted wrongly?", "mistake count"},
        {"Show me some data you predict incorrectly.", "mistake sample"},
    };
    const char* distractors[] = {
        "Please show what the gold labels are.",
        "What are the most frequent keywords in the data?",
        "Tell me a bit more about the data please.",
        "Which dataset are you working with?",
        "What model is running under the hood?",
        "Tell me a bit more about what I can do here.",
        "What's data augmentation?",
        "How does counterfactual generation work?",
        "Explain the domain terminology.",
        "Describe the dataset.",
        "Which labels exist in the data?",
        "What is the label distribution?",
        "How big is the data?",
        "What is the size of the dataset?",
        "Which capabilities do you offer?",
        "Describe the model.",
        "What background should I know about the domain?",
        "I want to learn about feature attribution.",
        "Give me the dataset details.",
        "Define the key domain concepts for me.",
    };
    for (const char* q : distractors) records.push_back({q, "countdata"});
    Dataset pool = make_corpus(records);

    const std::string query = "Can you show me how much data the model predicts incorrectly?";
    auto demos = select_demonstrations(query, pool, 5);
    REQUIRE(demos.size() == 5);

    // Independent oracle: brute-force cosine over the same pool.
    std::vector<std::pair<double, std::string>> brute;
    for (const auto& [q, p] : records) brute.push_back({reference_cosine(query, q), q});
    std::stable_sort(brute.begin(), brute.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    // The three paraphrases must fill the top ranks in both computations.
    std::set<std::string> top3 = {demos[0].question, demos[1].question, demos[2].question};
    std::set<std::string> expected = {records[0].first, records[1].first, records[2].first};
    CHECK(top3 == expected);
    std::set<std::string> brute3 = {brute[0].second, brute[1].second, brute[2].second};
    CHECK(brute3 == expected);
}

TEST_CASE("query present in the pool is selected first") {
    Dataset pool = make_corpus({
        {"Count the total number of data points.", "countdata"},
        {"Please show what the gold labels are.", "label"},
    });
    auto demos = select_demonstrations("Please show what the gold labels are.", pool, 2);
    CHECK(demos[0].gold_parse == "label");
}

TEST_CASE("http embedding backend round-trips through a local server") {
    httplib::Server server;
    server.Post("/embed", [](const httplib::Request& req, httplib::Response& res) {
        auto body = nlohmann::json::parse(req.body);
        std::string text = body["input"][0].get<std::string>();
        // Toy embedding: [len, vowels, 1]
        double vowels = std::count_if(text.begin(), text.end(), [](char c) {
            return std::string_view("aeiou").find(c) != std::string_view::npos;
        });
        nlohmann::json reply;
        reply["embeddings"] = {{static_cast<double>(text.size()), vowels, 1.0}};
        res.set_content(reply.dump(), "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    auto worker = std::thread([&server] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpEmbeddingBackend backend("http://127.0.0.1:" + std::to_string(port) + "/embed", 3);
    EmbeddingVector v = backend.embed("hello");
    CHECK(v.values == std::vector<float>{5.0f, 2.0f, 1.0f});
    CHECK_FALSE(backend.deterministic());

    server.stop();
    worker.join();
}

TEST_SUITE_END();
