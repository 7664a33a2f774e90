// Acceptance suite: one pass/fail line per criterion, non-zero exit on any
// failure. Run via ctest or directly; --data-dir overrides the bundled data
// location.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "coxql/backend.hpp"
#include "coxql/datagen.hpp"
#include "coxql/dataset.hpp"
#include "coxql/eval.hpp"
#include "coxql/grammar.hpp"
#include "coxql/parse.hpp"
#include "coxql/pipelines.hpp"
#include "coxql/prompts.hpp"
#include "coxql/retrieval.hpp"
#include "coxql/synth.hpp"
#include "paths.hpp"

using namespace coxql;
using Clock = std::chrono::steady_clock;

namespace {

std::string g_data_dir = std::string(test::kDataDir);
int g_failures = 0;

struct Criterion {
    bool ok = true;
    std::string detail;
    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
    void info(const std::string& what) {
        if (!detail.empty()) detail += "; ";
        detail += what;
    }
};

void report(int number, const std::string& name, const Criterion& c) {
    std::printf("[%s] criterion %d: %s%s%s\n", c.ok ? "PASS" : "FAIL", number, name.c_str(),
                c.detail.empty() ? "" : " -- ", c.detail.c_str());
    if (!c.ok) ++g_failures;
}

Dataset load_train() {
    return load_dataset(g_data_dir + "/coxql_train.jsonl", Split::Train);
}
Dataset load_test() {
    return load_dataset(g_data_dir + "/coxql_test.jsonl", Split::Test);
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// 1. Every bundled gold parse loads, validates and round-trips; the splits
//    have the released sizes; all under five seconds.
void criterion1() {
    Criterion c;
    auto start = Clock::now();
    try {
        Dataset train = load_train();
        Dataset test = load_test();
        c.require(train.size() == 1179,
                  "train size " + std::to_string(train.size()) + " != 1179");
        c.require(test.size() == 112, "test size " + std::to_string(test.size()) + " != 112");
        c.require(train.rejects.empty(),
                  std::to_string(train.rejects.size()) + " train rejects");
        c.require(test.rejects.empty(), std::to_string(test.rejects.size()) + " test rejects");
        for (const Dataset* ds : {&train, &test}) {
            for (const Example& ex : ds->examples) {
                ParseResult parsed = parse_query(ex.gold_parse);
                if (!parsed.ok()) {
                    c.require(false, "gold does not parse: " + ex.gold_parse);
                    break;
                }
                if (!validate(*parsed.ast).ok()) {
                    c.require(false, "gold does not validate: " + ex.gold_parse);
                    break;
                }
                if (canonicalize(*parsed.ast) != ex.gold_parse) {
                    c.require(false, "round-trip differs: " + ex.gold_parse);
                    break;
                }
                ParseResult raw = parse_query(ex.raw_parse);
                if (!raw.ok() || canonicalize(*raw.ast) != ex.gold_parse) {
                    c.require(false, "raw form does not normalize: " + ex.raw_parse);
                    break;
                }
            }
        }
    } catch (const std::exception& e) {
        c.require(false, e.what());
    }
    double elapsed = seconds_since(start);
    c.require(elapsed < 5.0, "took " + std::to_string(elapsed) + "s (limit 5)");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2fs", elapsed);
    c.info(std::string("1179+112 examples round-trip in ") + buf);
    report(1, "language completeness over the bundled corpus", c);
}

// 2. 1000 random-scorer decodes are grammar-valid; 1000 random valid ASTs are
//    accepted by the recognizer; all under ten seconds.
void criterion2() {
    Criterion c;
    auto start = Clock::now();
    Grammar grammar = Grammar::build();
    std::size_t decode_ok = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        RandomScorer scorer(seed);
        try {
            std::string out = constrained_decode(scorer, grammar, "prompt");
            if (parse_query(out).ok() && grammar.accepts(out)) ++decode_ok;
        } catch (const DecodeError&) {
        }
    }
    c.require(decode_ok == 1000,
              "only " + std::to_string(decode_ok) + "/1000 decodes grammar-valid");

    std::mt19937_64 rng(20240602);
    std::size_t accept_ok = 0;
    for (int i = 0; i < 1000; ++i) {
        QueryAst ast = sample_ast(rng);
        if (grammar.accepts(canonicalize(ast))) ++accept_ok;
    }
    c.require(accept_ok == 1000,
              "only " + std::to_string(accept_ok) + "/1000 asts recognized");
    double elapsed = seconds_since(start);
    c.require(elapsed < 10.0, "took " + std::to_string(elapsed) + "s (limit 10)");
    char buf[64];
    std::snprintf(buf, sizeof buf, "1000+1000 checks in %.2fs", elapsed);
    c.info(buf);
    report(2, "grammar soundness and sampled completeness", c);
}

// 3. GD, MP and MP+ each reach 100% exact match with the oracle backend.
void criterion3() {
    Criterion c;
    try {
        Dataset train = load_train();
        Dataset test = load_test();
        OracleBackend oracle(test);
        Grammar grammar = Grammar::build();
        PromptBundle prompts = PromptBundle::builtin();

        EvalSetup setup;
        setup.train = &train;
        setup.test = &test;
        setup.backend = &oracle;
        setup.grammar = &grammar;
        setup.prompts = &prompts;
        EvalReport report_ = run_eval({Strategy::Gd, Strategy::Mp, Strategy::MpPlus}, setup);
        for (const StrategyResult& s : report_.strategies) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "%s=%.2f%%", s.strategy.c_str(), s.accuracy * 100.0);
            c.info(buf);
            c.require(s.accuracy == 1.0, s.strategy + " below 100%");
        }
    } catch (const std::exception& e) {
        c.require(false, e.what());
    }
    report(3, "oracle ceiling on the 112-question test split", c);
}

// 4. Each corruption class alone at rate 1.0: MP+ restores every affected
//    question, MP stays below 100%; MP+ dominates MP on ten seeded mixed runs.
void criterion4() {
    Criterion c;
    try {
        Dataset train = load_train();
        Dataset test = load_test();
        OracleBackend oracle(test);
        PromptBundle prompts = PromptBundle::builtin();

        for (std::size_t i = 0; i < kCorruptionClassCount; ++i) {
            auto cls = static_cast<CorruptionClass>(i);
            CorruptionProfile profile = CorruptionProfile::single(cls, 1234 + i);
            CorruptingBackend backend(oracle, profile);
            std::size_t affected = 0, restored = 0, mp_wrong_on_affected = 0;
            for (const Example& ex : test.examples) {
                if (apply_corruptions(ex.gold_parse, profile) == ex.gold_parse) continue;
                ++affected;
                Prediction mp = mp_parse(ex.question, backend, prompts);
                if (!exact_match(mp.text, ex.gold_parse)) ++mp_wrong_on_affected;
                Prediction mpp = mp_plus_parse(ex.question, backend, prompts);
                if (exact_match(mpp.text, ex.gold_parse)) ++restored;
            }
            std::string name(corruption_class_name(cls));
            c.require(affected > 0, name + " fires on no test question");
            c.require(restored == affected,
                      name + " restored " + std::to_string(restored) + "/" +
                          std::to_string(affected));
            c.require(mp_wrong_on_affected > 0, name + " leaves mp at 100%");
            c.info(name + " " + std::to_string(restored) + "/" + std::to_string(affected));
        }

        Grammar grammar = Grammar::build();
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            CorruptionProfile mixed = CorruptionProfile::all(0.5, seed);
            CorruptingBackend backend(oracle, mixed);
            EvalSetup setup;
            setup.train = &train;
            setup.test = &test;
            setup.backend = &backend;
            setup.grammar = &grammar;
            setup.prompts = &prompts;
            setup.seed = seed;
            EvalReport report_ = run_eval({Strategy::Mp, Strategy::MpPlus}, setup);
            double mp = report_.strategies[0].accuracy;
            double mpp = report_.strategies[1].accuracy;
            c.require(mpp >= mp, "seed " + std::to_string(seed) + ": mp+ " +
                                     std::to_string(mpp) + " < mp " + std::to_string(mp));
        }
        c.info("dominance held on 10 seeds");
    } catch (const std::exception& e) {
        c.require(false, e.what());
    }
    report(4, "per-class repair guarantee and mp+ dominance", c);
}

// 5. The instance-level fixture: with topk recovery off the repair yields the
//    all/default form, with it on the gold parse.
void criterion5() {
    Criterion c;
    const std::string raw = "filter id 3 and nlpattribute attention all";
    const std::string question = "Top 3 important features for id 3!";

    RepairFlags off;
    off.topk_from_question = false;
    RepairTrace toff = template_check(raw, question, off);
    c.require(toff.ok() && *toff.final == "filter id 3 and nlpattribute all default",
              "flag off produced " + (toff.ok() ? *toff.final : toff.failure));

    RepairFlags on;
    on.topk_from_question = true;
    RepairTrace ton = template_check(raw, question, on);
    c.require(ton.ok() && *ton.final == "filter id 3 and nlpattribute topk 3 default",
              "flag on produced " + (ton.ok() ? *ton.final : ton.failure));
    report(5, "instance-level repair fixture under both repair flags", c);
}

// 6. NN baseline properties: deterministic, perfect on a verbatim corpus, and
//    at least five times the 1/31 random-intent floor on the bundled splits.
void criterion6() {
    Criterion c;
    try {
        Dataset train = load_train();
        Dataset test = load_test();

        NearestNeighborIndex index(train, default_embedder());
        std::size_t correct = 0;
        std::vector<std::string> first_preds;
        for (const Example& ex : test.examples) {
            std::string pred = index.rank(ex.question, 1).front().example->gold_parse;
            first_preds.push_back(pred);
            if (exact_match(pred, ex.gold_parse)) ++correct;
        }
        NearestNeighborIndex again(train, default_embedder());
        for (std::size_t i = 0; i < test.examples.size(); ++i) {
            if (again.rank(test.examples[i].question, 1).front().example->gold_parse !=
                first_preds[i]) {
                c.require(false, "nn is not deterministic across runs");
                break;
            }
        }

        Dataset verbatim = test;
        NearestNeighborIndex self(verbatim, default_embedder());
        for (const Example& ex : test.examples) {
            if (self.rank(ex.question, 1).front().example->gold_parse != ex.gold_parse) {
                c.require(false, "verbatim corpus lookup missed: " + ex.question);
                break;
            }
        }

        double accuracy = static_cast<double>(correct) / test.size();
        double floor = 5.0 / 31.0;
        char buf[96];
        std::snprintf(buf, sizeof buf, "nn accuracy %.2f%% (floor %.2f%%)", accuracy * 100.0,
                      floor * 100.0);
        c.info(buf);
        c.require(accuracy >= floor, "below the 5x random-intent floor");
    } catch (const std::exception& e) {
        c.require(false, e.what());
    }
    report(6, "nearest-neighbor baseline substitute properties", c);
}

// 7. Accuracy equals a brute-force recount on 200 randomized synthetic
//    prediction sets; the toy F1 case matches hand values to 1e-9.
void criterion7() {
    Criterion c;
    Dataset train = load_train();
    Dataset test = load_test();
    PromptBundle prompts = PromptBundle::builtin();
    std::mt19937_64 rng(123);
    for (int round = 0; round < 200 && c.ok; ++round) {
        // Scripted backend: replays one synthetic prediction per question.
        std::vector<std::pair<std::string, std::string>> mapping;
        for (const Example& ex : test.examples) {
            std::string pred;
            switch (rng() % 4) {
                case 0: pred = ex.gold_parse; break;
                case 1: pred = canonicalize(sample_ast(rng)); break;
                case 2: pred = "unparseable output"; break;
                default: pred = ex.gold_parse + " countdata"; break;
            }
            mapping.emplace_back(ex.question, pred);
        }
        OracleBackend scripted(mapping);
        EvalSetup setup;
        setup.train = &train;
        setup.test = &test;
        setup.backend = &scripted;
        setup.prompts = &prompts;
        EvalReport report_ = run_eval({Strategy::Mp}, setup);

        std::size_t brute = 0;
        for (std::size_t i = 0; i < mapping.size(); ++i) {
            if (exact_match(mapping[i].second, test.examples[i].gold_parse)) ++brute;
        }
        double expected = static_cast<double>(brute) / mapping.size();
        if (std::abs(report_.strategies[0].accuracy - expected) > 1e-12) {
            c.require(false, "round " + std::to_string(round) + ": harness accuracy " +
                                 std::to_string(report_.strategies[0].accuracy) +
                                 " != recount " + std::to_string(expected));
        }
    }

    auto result = per_category_f1_from_labels({"Data", "Meta", "Meta"}, {"Data", "Data", "Meta"});
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9; };
    c.require(close(result["Data"].precision, 1.0) && close(result["Data"].recall, 0.5) &&
                  close(result["Data"].f1, 2.0 / 3.0),
              "Data prf off");
    c.require(close(result["Meta"].precision, 0.5) && close(result["Meta"].recall, 1.0) &&
                  close(result["Meta"].f1, 2.0 / 3.0),
              "Meta prf off");
    report(7, "metric correctness against brute-force recounts", c);
}

// 8. The harness emits a populated report in the model x strategy and
//    category x strategy shape, serializable both ways.
void criterion8() {
    Criterion c;
    try {
        Dataset train = load_train();
        Dataset test = load_test();
        OracleBackend oracle(test);
        Grammar grammar = Grammar::build();
        PromptBundle prompts = PromptBundle::builtin();
        EvalSetup setup;
        setup.train = &train;
        setup.test = &test;
        setup.backend = &oracle;
        setup.grammar = &grammar;
        setup.prompts = &prompts;
        EvalReport report_ =
            run_eval({Strategy::Nn, Strategy::Gd, Strategy::Mp, Strategy::MpPlus}, setup);
        std::string tables = report_.render_tables();
        for (const char* needle :
             {"exact match accuracy (%)", "per-category F1 (%)", "NN", "GD", "MP", "MP+"}) {
            c.require(tables.find(needle) != std::string::npos,
                      std::string("missing '") + needle + "'");
        }
        std::size_t categories = 0;
        for (std::size_t i = 0; i < kCategoryCount; ++i) {
            if (tables.find(category_name(static_cast<Category>(i))) != std::string::npos) {
                ++categories;
            }
        }
        c.require(categories >= 7, "only " + std::to_string(categories) + " category rows");
        c.require(EvalReport::from_json(report_.to_json()) == report_,
                  "report json does not round-trip");
        c.info("4 strategy columns, " + std::to_string(categories) + " category rows");
    } catch (const std::exception& e) {
        c.require(false, e.what());
    }
    report(8, "report emitted in the strategy/category table shape", c);
}

}  // namespace

int main(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--data-dir") g_data_dir = argv[i + 1];
    }
    std::printf("acceptance suite (data: %s)\n", g_data_dir.c_str());
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    if (g_failures) {
        std::printf("%d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
