#include "coxql/eval.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "coxql/parse.hpp"
#include "coxql/retrieval.hpp"

namespace coxql {

using nlohmann::json;

std::string_view strategy_name(Strategy s) {
    switch (s) {
        case Strategy::Nn: return "nn";
        case Strategy::Gd: return "gd";
        case Strategy::Mp: return "mp";
        case Strategy::MpPlus: return "mp+";
    }
    return "?";
}

std::string_view strategy_display(Strategy s) {
    switch (s) {
        case Strategy::Nn: return "NN";
        case Strategy::Gd: return "GD";
        case Strategy::Mp: return "MP";
        case Strategy::MpPlus: return "MP+";
    }
    return "?";
}

std::optional<Strategy> strategy_from_name(std::string_view name) {
    if (name == "nn") return Strategy::Nn;
    if (name == "gd") return Strategy::Gd;
    if (name == "mp") return Strategy::Mp;
    if (name == "mp+" || name == "mpplus" || name == "mp_plus") return Strategy::MpPlus;
    return std::nullopt;
}

std::vector<Strategy> parse_strategy_list(std::string_view text) {
    if (text == "all") return {Strategy::Nn, Strategy::Gd, Strategy::Mp, Strategy::MpPlus};
    std::vector<Strategy> out;
    std::size_t begin = 0;
    while (begin <= text.size()) {
        std::size_t comma = text.find(',', begin);
        std::string_view item = text.substr(
            begin, comma == std::string_view::npos ? std::string_view::npos : comma - begin);
        if (!item.empty()) {
            auto s = strategy_from_name(item);
            if (!s) throw std::invalid_argument("unknown strategy: " + std::string(item));
            out.push_back(*s);
        }
        if (comma == std::string_view::npos) break;
        begin = comma + 1;
    }
    if (out.empty()) throw std::invalid_argument("no strategy given");
    return out;
}

bool exact_match(std::string_view pred, std::string_view gold) {
    std::string np = normalize_surface(pred);
    if (np.empty()) return false;
    return np == normalize_surface(gold);
}

std::string predicted_category_label(std::string_view pred) {
    ParseResult parsed = parse_query(pred);
    if (!parsed.ok()) return "invalid";
    return std::string(category_name(category_of(parsed.ast->terminal)));
}

std::map<std::string, Prf> per_category_f1_from_labels(
    const std::vector<std::string>& pred_labels, const std::vector<std::string>& gold_labels) {
    if (pred_labels.size() != gold_labels.size()) {
        throw LengthMismatchError("prediction/gold label counts differ");
    }
    struct Counts {
        std::size_t tp = 0, fp = 0, fn = 0;
    };
    std::map<std::string, Counts> counts;
    for (std::size_t i = 0; i < pred_labels.size(); ++i) {
        if (pred_labels[i] == gold_labels[i]) {
            ++counts[gold_labels[i]].tp;
        } else {
            ++counts[pred_labels[i]].fp;
            ++counts[gold_labels[i]].fn;
        }
    }
    std::map<std::string, Prf> out;
    for (const auto& [label, c] : counts) {
        Prf prf;
        prf.precision = c.tp + c.fp ? static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
        prf.recall = c.tp + c.fn ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
        prf.f1 = prf.precision + prf.recall > 0.0
                     ? 2.0 * prf.precision * prf.recall / (prf.precision + prf.recall)
                     : 0.0;
        out[label] = prf;
    }
    return out;
}

std::map<std::string, Prf> per_category_f1(const std::vector<std::string>& preds,
                                           const std::vector<std::string>& golds) {
    if (preds.size() != golds.size()) {
        throw LengthMismatchError("prediction/gold counts differ");
    }
    std::vector<std::string> pred_labels, gold_labels;
    pred_labels.reserve(preds.size());
    gold_labels.reserve(golds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
        pred_labels.push_back(predicted_category_label(preds[i]));
        gold_labels.push_back(predicted_category_label(golds[i]));
    }
    return per_category_f1_from_labels(pred_labels, gold_labels);
}

std::vector<bool> diff_tokens(std::string_view pred, std::string_view gold) {
    std::vector<std::string> p = tokenize_query(pred);
    std::vector<std::string> g = tokenize_query(gold);
    std::size_t n = p.size(), m = g.size();
    std::vector<std::vector<std::size_t>> dp(n + 1, std::vector<std::size_t>(m + 1, 0));
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            dp[i][j] = p[i - 1] == g[j - 1] ? dp[i - 1][j - 1] + 1
                                            : std::max(dp[i - 1][j], dp[i][j - 1]);
        }
    }
    std::vector<bool> mask(n, false);
    std::size_t i = n, j = m;
    while (i > 0 && j > 0) {
        if (p[i - 1] == g[j - 1] && dp[i][j] == dp[i - 1][j - 1] + 1) {
            mask[i - 1] = true;
            --i;
            --j;
        } else if (dp[i - 1][j] >= dp[i][j - 1]) {
            --i;
        } else {
            --j;
        }
    }
    return mask;
}

namespace {

StrategyResult score_strategy(Strategy strategy, const std::vector<std::string>& preds,
                              const std::vector<std::string>& notes, const Dataset& test) {
    StrategyResult result;
    result.strategy = std::string(strategy_name(strategy));
    result.total = test.examples.size();
    std::vector<std::string> golds;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test.examples.size(); ++i) {
        const Example& ex = test.examples[i];
        golds.push_back(ex.gold_parse);
        bool parseable = normalize_query(preds[i]).has_value();
        bool ok = exact_match(preds[i], ex.gold_parse);
        if (ok) ++correct;
        if (!parseable) ++result.invalid;
        InstanceDiff diff;
        diff.question = ex.question;
        diff.gold = ex.gold_parse;
        diff.predicted = normalize_surface(preds[i]);
        diff.matched = diff_tokens(diff.predicted, diff.gold);
        diff.correct = ok;
        diff.note = notes[i];
        result.diffs.push_back(std::move(diff));
    }
    result.accuracy =
        test.examples.empty() ? 0.0 : static_cast<double>(correct) / test.examples.size();
    result.per_category = per_category_f1(preds, golds);
    return result;
}

}  // namespace

EvalReport run_eval(const std::vector<Strategy>& strategies, const EvalSetup& setup) {
    if (!setup.train || !setup.test) throw std::invalid_argument("run_eval needs both splits");
    const EmbeddingBackend& embedder = setup.embedder ? *setup.embedder : default_embedder();

    EvalReport report;
    report.model = setup.backend ? setup.backend->label() : "none";
    report.seed = setup.seed;
    report.note =
        "category F1 credits the predicted terminal's category even when slots differ; "
        "invalid predictions score as wrong and count against the gold category.";

    std::optional<NearestNeighborIndex> index;
    auto train_index = [&]() -> const NearestNeighborIndex& {
        if (!index) index.emplace(*setup.train, embedder);
        return *index;
    };

    for (Strategy strategy : strategies) {
        if (strategy != Strategy::Nn && !setup.backend) {
            throw std::invalid_argument("strategy needs a generation backend");
        }
        if (strategy == Strategy::Gd && !setup.grammar) {
            throw std::invalid_argument("gd needs a grammar");
        }
        if (strategy != Strategy::Nn && !setup.prompts) {
            throw std::invalid_argument("strategy needs prompt templates");
        }
        std::vector<std::string> preds, notes;
        preds.reserve(setup.test->examples.size());
        for (const Example& ex : setup.test->examples) {
            try {
                switch (strategy) {
                    case Strategy::Nn: {
                        auto top = train_index().rank(ex.question, 1);
                        preds.push_back(top.front().example->gold_parse);
                        notes.emplace_back("nn");
                        break;
                    }
                    case Strategy::Gd: {
                        Prediction p = gd_parse(ex.question, *setup.backend, *setup.grammar,
                                                train_index(), *setup.prompts, setup.gd_shots);
                        preds.push_back(p.text);
                        notes.push_back(p.note);
                        break;
                    }
                    case Strategy::Mp: {
                        Prediction p = mp_parse(ex.question, *setup.backend, *setup.prompts);
                        preds.push_back(p.text);
                        notes.push_back(p.note);
                        break;
                    }
                    case Strategy::MpPlus: {
                        Prediction p = mp_plus_parse(ex.question, *setup.backend, *setup.prompts,
                                                     setup.repair);
                        preds.push_back(p.text);
                        notes.push_back(p.note);
                        break;
                    }
                }
            } catch (const BackendError& e) {
                preds.emplace_back("");
                notes.push_back(std::string("backend-error: ") + e.what());
            }
        }
        report.strategies.push_back(score_strategy(strategy, preds, notes, *setup.test));
    }
    return report;
}

std::string EvalReport::to_json() const {
    json j;
    j["model"] = model;
    j["note"] = note;
    j["seed"] = seed;
    json strategies_json = json::array();
    for (const StrategyResult& s : strategies) {
        json sj;
        sj["strategy"] = s.strategy;
        sj["accuracy"] = s.accuracy;
        sj["total"] = s.total;
        sj["invalid"] = s.invalid;
        json cats = json::object();
        for (const auto& [name, prf] : s.per_category) {
            cats[name] = {{"precision", prf.precision}, {"recall", prf.recall}, {"f1", prf.f1}};
        }
        sj["per_category"] = cats;
        json diffs = json::array();
        for (const InstanceDiff& d : s.diffs) {
            json dj;
            dj["question"] = d.question;
            dj["gold"] = d.gold;
            dj["predicted"] = d.predicted;
            dj["matched"] = d.matched;
            dj["correct"] = d.correct;
            dj["note"] = d.note;
            diffs.push_back(std::move(dj));
        }
        sj["diffs"] = diffs;
        strategies_json.push_back(std::move(sj));
    }
    j["strategies"] = strategies_json;
    return j.dump(2);
}

EvalReport EvalReport::from_json(std::string_view text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw std::invalid_argument("report is not a json object");
    }
    EvalReport report;
    report.model = j.value("model", "");
    report.note = j.value("note", "");
    report.seed = j.value("seed", 0ull);
    const json strategies_json = j.value("strategies", json::array());
    for (const json& sj : strategies_json) {
        StrategyResult s;
        s.strategy = sj.value("strategy", "");
        s.accuracy = sj.value("accuracy", 0.0);
        s.total = sj.value("total", 0ull);
        s.invalid = sj.value("invalid", 0ull);
        const json cats = sj.value("per_category", json::object());
        for (const auto& [name, prf] : cats.items()) {
            s.per_category[name] = Prf{prf.value("precision", 0.0), prf.value("recall", 0.0),
                                       prf.value("f1", 0.0)};
        }
        const json diffs_json = sj.value("diffs", json::array());
        for (const json& dj : diffs_json) {
            InstanceDiff d;
            d.question = dj.value("question", "");
            d.gold = dj.value("gold", "");
            d.predicted = dj.value("predicted", "");
            d.matched = dj.value("matched", std::vector<bool>{});
            d.correct = dj.value("correct", false);
            d.note = dj.value("note", "");
            s.diffs.push_back(std::move(d));
        }
        report.strategies.push_back(std::move(s));
    }
    return report;
}

std::string EvalReport::render_tables() const {
    std::ostringstream os;
    os << "# " << note << "\n";
    os << std::fixed << std::setprecision(2);

    os << "\nexact match accuracy (%)\n";
    os << std::left << std::setw(24) << "model";
    for (const StrategyResult& s : strategies) {
        auto st = strategy_from_name(s.strategy);
        os << std::right << std::setw(8) << (st ? strategy_display(*st) : s.strategy);
    }
    os << "\n" << std::left << std::setw(24) << model;
    for (const StrategyResult& s : strategies) {
        os << std::right << std::setw(8) << s.accuracy * 100.0;
    }
    os << "\n";

    std::vector<std::string> categories;
    for (std::size_t i = 0; i < kCategoryCount; ++i) {
        std::string name(category_name(static_cast<Category>(i)));
        bool present = std::any_of(strategies.begin(), strategies.end(),
                                   [&](const StrategyResult& s) {
                                       return s.per_category.count(name) > 0;
                                   });
        if (present) categories.push_back(name);
    }
    bool any_invalid = std::any_of(strategies.begin(), strategies.end(),
                                   [](const StrategyResult& s) {
                                       return s.per_category.count("invalid") > 0;
                                   });
    if (any_invalid) categories.emplace_back("invalid");

    os << "\nper-category F1 (%)\n";
    os << std::left << std::setw(24) << "category";
    for (const StrategyResult& s : strategies) {
        auto st = strategy_from_name(s.strategy);
        os << std::right << std::setw(8) << (st ? strategy_display(*st) : s.strategy);
    }
    os << "\n";
    for (const std::string& cat : categories) {
        os << std::left << std::setw(24) << cat;
        for (const StrategyResult& s : strategies) {
            auto it = s.per_category.find(cat);
            if (it == s.per_category.end()) {
                os << std::right << std::setw(8) << "-";
            } else {
                os << std::right << std::setw(8) << it->second.f1 * 100.0;
            }
        }
        os << "\n";
    }
    return os.str();
}

std::string EvalReport::render_diffs(bool failures_only) const {
    std::ostringstream os;
    for (const StrategyResult& s : strategies) {
        os << "== " << s.strategy << "\n";
        for (const InstanceDiff& d : s.diffs) {
            if (failures_only && d.correct) continue;
            os << (d.correct ? "  [ok] " : "  [x]  ") << d.question << "\n";
            os << "       gold: " << d.gold << "\n";
            os << "       pred: ";
            std::vector<std::string> toks = tokenize_query(d.predicted);
            for (std::size_t i = 0; i < toks.size(); ++i) {
                if (i) os << ' ';
                bool hit = i < d.matched.size() && d.matched[i];
                os << (hit ? toks[i] : "*" + toks[i] + "*");
            }
            if (toks.empty()) os << "(empty)";
            os << "\n";
        }
    }
    return os.str();
}

}  // namespace coxql
