#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coxql/backend.hpp"
#include "coxql/dataset.hpp"
#include "coxql/pipelines.hpp"

namespace coxql {

enum class Strategy : std::uint8_t { Nn, Gd, Mp, MpPlus };

std::string_view strategy_name(Strategy s);     // nn / gd / mp / mp+
std::string_view strategy_display(Strategy s);  // NN / GD / MP / MP+
std::optional<Strategy> strategy_from_name(std::string_view name);
/// Comma-separated list; "all" expands to all four.
std::vector<Strategy> parse_strategy_list(std::string_view text);

/// True iff both strings normalize to the same canonical query. Strings that
/// do not parse never match.
bool exact_match(std::string_view pred, std::string_view gold);

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool operator==(const Prf&) const = default;
};

class LengthMismatchError : public std::invalid_argument {
public:
    explicit LengthMismatchError(const std::string& what) : std::invalid_argument(what) {}
};

/// One-vs-rest precision/recall/F1 over category labels (fractions in [0,1]).
/// Categories absent from both sides are omitted.
std::map<std::string, Prf> per_category_f1_from_labels(
    const std::vector<std::string>& pred_labels, const std::vector<std::string>& gold_labels);

/// Categories are derived from the parses' terminal operations; an
/// unparseable prediction lands in the reserved "invalid" label.
std::map<std::string, Prf> per_category_f1(const std::vector<std::string>& preds,
                                           const std::vector<std::string>& golds);

/// Category label of a prediction string ("invalid" when unparseable).
std::string predicted_category_label(std::string_view pred);

/// LCS alignment over whitespace tokens; the mask marks which prediction
/// tokens are part of the match with the gold string.
std::vector<bool> diff_tokens(std::string_view pred, std::string_view gold);

struct InstanceDiff {
    std::string question;
    std::string gold;
    std::string predicted;
    std::vector<bool> matched;
    bool correct = false;
    std::string note;
    bool operator==(const InstanceDiff&) const = default;
};

struct StrategyResult {
    std::string strategy;
    double accuracy = 0.0;  // fraction in [0,1]
    std::size_t total = 0;
    std::size_t invalid = 0;
    std::map<std::string, Prf> per_category;
    std::vector<InstanceDiff> diffs;
    bool operator==(const StrategyResult&) const = default;
};

struct EvalReport {
    std::string model;
    std::string note;
    std::uint64_t seed = 0;
    std::vector<StrategyResult> strategies;

    bool operator==(const EvalReport&) const = default;
    std::string to_json() const;
    static EvalReport from_json(std::string_view text);  // throws std::invalid_argument
    /// Accuracy row (model x strategy) and per-category F1 block, percent.
    std::string render_tables() const;
    std::string render_diffs(bool failures_only = true) const;
};

struct EvalSetup {
    const Dataset* train = nullptr;
    const Dataset* test = nullptr;
    GenerationBackend* backend = nullptr;  // required for gd/mp/mp+
    const Grammar* grammar = nullptr;
    const PromptBundle* prompts = nullptr;
    const EmbeddingBackend* embedder = nullptr;  // default lexical when null
    RepairFlags repair;
    std::size_t gd_shots = 20;
    std::uint64_t seed = 0;
};

/// Runs each strategy over the test split. Backend failures on single
/// questions are recorded per instance and score as wrong; they do not abort
/// the run.
EvalReport run_eval(const std::vector<Strategy>& strategies, const EvalSetup& setup);

}  // namespace coxql
