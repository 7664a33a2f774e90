// coxql - command line front end for the CoXQL parsing toolkit.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "coxql/backend.hpp"
#include "coxql/datagen.hpp"
#include "coxql/dataset.hpp"
#include "coxql/eval.hpp"
#include "coxql/grammar.hpp"
#include "coxql/parse.hpp"
#include "coxql/pipelines.hpp"
#include "coxql/prompts.hpp"
#include "coxql/retrieval.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitData = 2;
constexpr int kExitBackend = 3;

using namespace coxql;

nlohmann::json slot_to_json(const SlotValue& slot) {
    return {{"class", std::string(slot_class_name(slot_class(slot)))},
            {"text", render_slot(slot)}};
}

nlohmann::json ast_to_json(const QueryAst& ast) {
    nlohmann::json j;
    nlohmann::json filters = nlohmann::json::array();
    for (const FilterLink& link : ast.filters) {
        nlohmann::json f;
        f["op"] = std::string(token_for(link.clause.kind));
        f["args"] = nlohmann::json::array();
        for (const SlotValue& arg : link.clause.args) f["args"].push_back(slot_to_json(arg));
        f["connective"] = std::string(token_for(link.conn));
        filters.push_back(std::move(f));
    }
    j["filters"] = filters;
    j["operation"] = std::string(token_for(ast.terminal));
    j["category"] = std::string(category_name(category_of(ast.terminal)));
    j["slots"] = nlohmann::json::array();
    for (const SlotValue& slot : ast.slots) j["slots"].push_back(slot_to_json(slot));
    return j;
}

int cmd_parse(const std::string& query, bool as_json) {
    ParseResult result = parse_query(query);
    if (!result.ok()) {
        if (as_json) {
            std::cout << nlohmann::json{{"ok", false}, {"error", result.error->message()}}.dump(2)
                      << "\n";
        } else {
            std::cerr << "parse error: " << result.error->message() << "\n";
        }
        return kExitData;
    }
    std::string canonical = canonicalize(*result.ast);
    if (as_json) {
        nlohmann::json j = ast_to_json(*result.ast);
        j["ok"] = true;
        j["canonical"] = canonical;
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "canonical: " << canonical << "\n";
        std::cout << "operation: " << token_for(result.ast->terminal) << " ("
                  << category_name(category_of(result.ast->terminal)) << ")\n";
        for (const FilterLink& link : result.ast->filters) {
            std::cout << "filter:    " << token_for(link.clause.kind);
            for (const SlotValue& arg : link.clause.args) std::cout << ' ' << render_slot(arg);
            std::cout << " [" << token_for(link.conn) << "]\n";
        }
        for (const SlotValue& slot : result.ast->slots) {
            std::cout << "slot:      " << render_slot(slot) << "\n";
        }
    }
    return kExitOk;
}

struct BackendChoice {
    std::string kind = "http";  // http | oracle | corrupt
    std::string config_path;
    std::string profile_path;
    std::uint64_t seed = 0;
};

std::unique_ptr<GenerationBackend> build_backend(const BackendChoice& choice,
                                                 const Dataset& test,
                                                 std::unique_ptr<OracleBackend>& oracle_keeper) {
    if (choice.kind == "oracle") {
        return std::make_unique<OracleBackend>(test);
    }
    if (choice.kind == "corrupt") {
        oracle_keeper = std::make_unique<OracleBackend>(test);
        CorruptionProfile profile = choice.profile_path.empty()
                                        ? CorruptionProfile::all(1.0, choice.seed)
                                        : CorruptionProfile::load_file(choice.profile_path);
        if (choice.seed) profile.seed = choice.seed;
        return std::make_unique<CorruptingBackend>(*oracle_keeper, profile);
    }
    if (choice.kind == "http") {
        ConfigMap cfg = choice.config_path.empty() ? ConfigMap{}
                                                   : ConfigMap::load_file(choice.config_path);
        BackendConfig bc = BackendConfig::from_config(cfg);
        if (bc.endpoint.empty()) {
            throw BackendError(BackendError::Kind::Transport,
                               "no endpoint configured; pass --config with backend.endpoint or "
                               "use --backend oracle");
        }
        return std::make_unique<HttpBackend>(bc);
    }
    throw std::invalid_argument("unknown backend kind: " + choice.kind);
}

PromptBundle load_prompts(const std::string& dir) {
    if (dir.empty()) return PromptBundle::builtin();
    return PromptBundle::load_dir(dir);
}

// embedding.endpoint in the config switches retrieval to the remote service;
// the lexical embedder is the offline default.
std::unique_ptr<EmbeddingBackend> embedder_from_config(const ConfigMap& cfg) {
    auto endpoint = cfg.get("embedding.endpoint");
    if (!endpoint) return nullptr;
    return std::make_unique<HttpEmbeddingBackend>(
        *endpoint, static_cast<std::size_t>(cfg.get_int("embedding.dimension", 768)),
        cfg.get_double("embedding.timeout_seconds", 30.0));
}

int cmd_eval(const std::string& strategies_arg, const std::string& train_path,
             const std::string& test_path, const BackendChoice& choice,
             const std::string& prompts_dir, const std::string& out_path, bool as_json,
             bool show_diffs) {
    std::vector<Strategy> strategies = parse_strategy_list(strategies_arg);
    Dataset train = load_dataset(train_path, Split::Train);
    Dataset test = load_dataset(test_path, Split::Test);
    Grammar grammar = Grammar::build();
    PromptBundle prompts = load_prompts(prompts_dir);

    bool needs_backend = std::any_of(strategies.begin(), strategies.end(),
                                     [](Strategy s) { return s != Strategy::Nn; });
    std::unique_ptr<OracleBackend> oracle_keeper;
    std::unique_ptr<GenerationBackend> backend;
    if (needs_backend) backend = build_backend(choice, test, oracle_keeper);

    ConfigMap cfg = choice.config_path.empty() ? ConfigMap{}
                                               : ConfigMap::load_file(choice.config_path);
    std::unique_ptr<EmbeddingBackend> remote_embedder = embedder_from_config(cfg);
    EvalSetup setup;
    setup.train = &train;
    setup.test = &test;
    setup.backend = backend.get();
    setup.grammar = &grammar;
    setup.prompts = &prompts;
    setup.embedder = remote_embedder.get();
    setup.repair = RepairFlags::from_config(cfg);
    setup.seed = choice.seed;

    EvalReport report = run_eval(strategies, setup);
    if (as_json) {
        std::cout << report.to_json() << "\n";
    } else {
        std::cout << report.render_tables();
        if (show_diffs) std::cout << "\n" << report.render_diffs();
    }
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw IoError("cannot write " + out_path);
        out << report.to_json() << "\n";
    }
    return kExitOk;
}

int cmd_corrupt_suite(const std::string& train_path, const std::string& test_path,
                      const std::string& profile_path, std::uint64_t seed,
                      const std::string& prompts_dir, bool as_json) {
    Dataset train = load_dataset(train_path, Split::Train);
    Dataset test = load_dataset(test_path, Split::Test);
    PromptBundle prompts = load_prompts(prompts_dir);
    OracleBackend oracle(test);

    CorruptionProfile base = profile_path.empty() ? CorruptionProfile::all(1.0, seed)
                                                  : CorruptionProfile::load_file(profile_path);
    if (seed) base.seed = seed;

    nlohmann::json rows = nlohmann::json::array();
    std::cout << "repair guarantee matrix (seed " << base.seed << ")\n";
    std::cout << "class               affected  mp-exact  mp+-exact  restored\n";
    for (const auto& [cls, rate] : base.rates) {
        if (rate <= 0.0) continue;
        CorruptionProfile single = CorruptionProfile::single(cls, base.seed);
        CorruptingBackend backend(oracle, single);
        std::size_t affected = 0, mp_ok = 0, mpp_ok = 0;
        for (const Example& ex : test.examples) {
            if (apply_corruptions(ex.gold_parse, single) == ex.gold_parse) continue;
            ++affected;
            Prediction mp = mp_parse(ex.question, backend, prompts);
            Prediction mpp = mp_plus_parse(ex.question, backend, prompts);
            if (exact_match(mp.text, ex.gold_parse)) ++mp_ok;
            if (exact_match(mpp.text, ex.gold_parse)) ++mpp_ok;
        }
        double restored = affected ? 100.0 * static_cast<double>(mpp_ok) / affected : 100.0;
        std::printf("%-20s %8zu %9zu %10zu %8.1f%%\n",
                    std::string(corruption_class_name(cls)).c_str(), affected, mp_ok, mpp_ok,
                    restored);
        rows.push_back({{"class", std::string(corruption_class_name(cls))},
                        {"affected", affected},
                        {"mp_exact", mp_ok},
                        {"mp_plus_exact", mpp_ok},
                        {"restored_pct", restored}});
    }
    if (as_json) std::cout << rows.dump(2) << "\n";
    (void)train;
    return kExitOk;
}

int cmd_repl(const std::string& strategy_arg, const std::string& train_path,
             const std::string& test_path, const BackendChoice& choice,
             const std::string& prompts_dir) {
    auto strategy = strategy_from_name(strategy_arg);
    if (!strategy) throw std::invalid_argument("unknown strategy: " + strategy_arg);
    Dataset train = load_dataset(train_path, Split::Train);
    Grammar grammar = Grammar::build();
    PromptBundle prompts = load_prompts(prompts_dir);
    ConfigMap cfg = choice.config_path.empty() ? ConfigMap{}
                                               : ConfigMap::load_file(choice.config_path);
    std::unique_ptr<EmbeddingBackend> remote_embedder = embedder_from_config(cfg);
    const EmbeddingBackend& embedder =
        remote_embedder ? static_cast<const EmbeddingBackend&>(*remote_embedder)
                        : default_embedder();
    NearestNeighborIndex index(train, embedder);

    std::unique_ptr<OracleBackend> oracle_keeper;
    std::unique_ptr<GenerationBackend> backend;
    if (*strategy != Strategy::Nn) {
        Dataset test = test_path.empty() ? train : load_dataset(test_path, Split::Test);
        backend = build_backend(choice, test, oracle_keeper);
    }

    std::cout << "question> " << std::flush;
    std::string line;
    while (std::getline(std::cin, line)) {
        if (line.empty() || line == "exit" || line == "quit") break;
        try {
            std::string text;
            bool valid = true;
            switch (*strategy) {
                case Strategy::Nn: {
                    auto top = index.rank(line, 1);
                    text = top.front().example->gold_parse;
                    break;
                }
                case Strategy::Gd: {
                    Prediction p = gd_parse(line, *backend, grammar, index, prompts);
                    text = p.text;
                    valid = p.valid;
                    break;
                }
                case Strategy::Mp: {
                    Prediction p = mp_parse(line, *backend, prompts);
                    text = p.text;
                    valid = p.valid;
                    break;
                }
                case Strategy::MpPlus: {
                    Prediction p = mp_plus_parse(line, *backend, prompts);
                    text = p.text;
                    valid = p.valid;
                    break;
                }
            }
            std::cout << (valid ? "parse: " : "parse (invalid): ") << text << "\n";
        } catch (const BackendError& e) {
            std::cout << "backend error: " << e.what() << "\n";
        }
        std::cout << "question> " << std::flush;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CoXQL explanation-request parsing toolkit"};
    app.require_subcommand(1);

    // parse
    std::string parse_text;
    bool parse_json = false;
    CLI::App* parse_cmd = app.add_subcommand("parse", "Parse one query and print its structure");
    parse_cmd->add_option("query", parse_text, "query string")->required();
    parse_cmd->add_flag("--json", parse_json, "machine-readable output");

    // stats
    std::string stats_path, stats_split = "train";
    bool stats_json = false;
    CLI::App* stats_cmd = app.add_subcommand("stats", "Dataset statistics");
    stats_cmd->add_option("file", stats_path, "jsonl or tsv dataset file")->required();
    stats_cmd->add_option("--split", stats_split, "split tag (train|test)");
    stats_cmd->add_flag("--json", stats_json, "machine-readable output");

    // eval
    std::string eval_strategies = "nn", eval_train, eval_test, eval_out, eval_prompts;
    bool eval_json = false, eval_diffs = false;
    BackendChoice eval_backend;
    CLI::App* eval_cmd = app.add_subcommand("eval", "Run parsing strategies over a test split");
    eval_cmd->add_option("--strategy", eval_strategies,
                         "nn|gd|mp|mp+|all or comma-separated list");
    eval_cmd->add_option("--train", eval_train, "training split")->required();
    eval_cmd->add_option("--test", eval_test, "test split")->required();
    eval_cmd->add_option("--config", eval_backend.config_path, "backend/repair config file");
    eval_cmd->add_option("--backend", eval_backend.kind, "http|oracle|corrupt");
    eval_cmd->add_option("--profile", eval_backend.profile_path,
                         "corruption profile (backend corrupt)");
    eval_cmd->add_option("--seed", eval_backend.seed, "seed for corrupting backend");
    eval_cmd->add_option("--out", eval_out, "write the report as json");
    eval_cmd->add_option("--prompts", eval_prompts, "prompt template directory");
    eval_cmd->add_flag("--json", eval_json, "print the report as json");
    eval_cmd->add_flag("--diffs", eval_diffs, "print instance-level diffs");

    // corrupt-suite
    std::string cs_train, cs_test, cs_profile, cs_prompts;
    std::uint64_t cs_seed = 0;
    bool cs_json = false;
    CLI::App* cs_cmd = app.add_subcommand("corrupt-suite", "Per-class repair guarantee matrix");
    cs_cmd->add_option("--train", cs_train, "training split")->required();
    cs_cmd->add_option("--test", cs_test, "test split")->required();
    cs_cmd->add_option("--profile", cs_profile, "corruption profile json");
    cs_cmd->add_option("--seed", cs_seed, "override profile seed");
    cs_cmd->add_option("--prompts", cs_prompts, "prompt template directory");
    cs_cmd->add_flag("--json", cs_json, "also print machine-readable rows");

    // repl
    std::string repl_strategy = "nn", repl_train, repl_test, repl_prompts;
    BackendChoice repl_backend;
    CLI::App* repl_cmd = app.add_subcommand("repl", "Interactive question-to-parse loop");
    repl_cmd->add_option("--strategy", repl_strategy, "nn|gd|mp|mp+");
    repl_cmd->add_option("--train", repl_train, "training split")->required();
    repl_cmd->add_option("--test", repl_test, "test split (oracle/corrupt backends)");
    repl_cmd->add_option("--config", repl_backend.config_path, "backend config file");
    repl_cmd->add_option("--backend", repl_backend.kind, "http|oracle|corrupt");
    repl_cmd->add_option("--prompts", repl_prompts, "prompt template directory");

    // gen-data
    std::string gen_out = "data";
    std::size_t gen_train = 1179, gen_test = 112;
    std::uint64_t gen_seed = 7;
    CLI::App* gen_cmd = app.add_subcommand("gen-data", "Generate the bundled corpus");
    gen_cmd->add_option("--out", gen_out, "output directory");
    gen_cmd->add_option("--train-size", gen_train, "training examples");
    gen_cmd->add_option("--test-size", gen_test, "test examples");
    gen_cmd->add_option("--seed", gen_seed, "generator seed");

    // grammar
    std::string grammar_out;
    bool grammar_check = false;
    CLI::App* grammar_cmd = app.add_subcommand("grammar", "Dump or check the query grammar");
    grammar_cmd->add_option("--dump", grammar_out, "write production rules to a file ('-' for "
                                                   "stdout)");
    grammar_cmd->add_flag("--check", grammar_check, "verify the dump round-trips");

    // prompts
    std::string prompts_out;
    CLI::App* prompts_cmd = app.add_subcommand("prompts", "Write the built-in prompt templates");
    prompts_cmd->add_option("--out", prompts_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*parse_cmd) return cmd_parse(parse_text, parse_json);
        if (*stats_cmd) {
            Split split = stats_split == "test" ? Split::Test : Split::Train;
            Dataset ds = load_dataset(stats_path, split);
            std::cout << (stats_json ? dataset_stats_json(ds) : dataset_stats_text(ds)) << "\n";
            return kExitOk;
        }
        if (*eval_cmd) {
            return cmd_eval(eval_strategies, eval_train, eval_test, eval_backend, eval_prompts,
                            eval_out, eval_json, eval_diffs);
        }
        if (*cs_cmd) {
            return cmd_corrupt_suite(cs_train, cs_test, cs_profile, cs_seed, cs_prompts, cs_json);
        }
        if (*repl_cmd) {
            return cmd_repl(repl_strategy, repl_train, repl_test, repl_backend, repl_prompts);
        }
        if (*gen_cmd) {
            DatagenOptions options;
            options.train_size = gen_train;
            options.test_size = gen_test;
            options.seed = gen_seed;
            GeneratedCorpus corpus = generate_corpus(options);
            std::filesystem::create_directories(gen_out);
            std::ofstream train_out(std::filesystem::path(gen_out) / "coxql_train.jsonl");
            train_out << records_to_jsonl(corpus.train);
            std::ofstream test_out(std::filesystem::path(gen_out) / "coxql_test.jsonl");
            test_out << records_to_jsonl(corpus.test);
            std::cout << "wrote " << corpus.train.size() << " train and " << corpus.test.size()
                      << " test records to " << gen_out << "\n";
            return kExitOk;
        }
        if (*grammar_cmd) {
            Grammar grammar = Grammar::build();
            std::string dump = grammar.dump();
            if (grammar_check) {
                Grammar reloaded = Grammar::from_dump(dump);
                if (reloaded.dump() != dump) {
                    std::cerr << "grammar dump does not round-trip\n";
                    return kExitData;
                }
                std::cout << "grammar dump round-trips (" << dump.size() << " bytes)\n";
            }
            if (!grammar_out.empty()) {
                if (grammar_out == "-") {
                    std::cout << dump;
                } else {
                    std::ofstream out(grammar_out);
                    if (!out) throw IoError("cannot write " + grammar_out);
                    out << dump;
                }
            }
            return kExitOk;
        }
        if (*prompts_cmd) {
            PromptBundle::builtin().write_dir(prompts_out);
            std::cout << "wrote prompt templates to " << prompts_out << "\n";
            return kExitOk;
        }
    } catch (const BackendError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const EmptyDatasetError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitOk;
}
