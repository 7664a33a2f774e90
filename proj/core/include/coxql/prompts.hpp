#pragma once

#include <map>
#include <string>
#include <vector>

#include "coxql/dataset.hpp"

namespace coxql {

struct Demonstration {
    std::string question;
    std::string parse;
};

/// Prompt templates for the parsing strategies. `{question}` is substituted
/// everywhere; the guided-decoding template additionally takes
/// `{demonstrations}` for the retrieved examples. Every template ends with a
/// `Question: {question}` line so backends can locate the live question.
class PromptBundle {
public:
    /// Built-in templates: the coarse prompt demonstrates one question per
    /// operation, the per-operation fine prompts carry slot-rich examples.
    static PromptBundle builtin();

    /// Loads coarse.txt, gd.txt and fine/<op>.txt from a directory.
    static PromptBundle load_dir(const std::string& dir);
    void write_dir(const std::string& dir) const;

    std::string render_coarse(const std::string& question) const;
    std::string render_fine(OperationKind op, const std::string& question) const;
    std::string render_gd(const std::vector<Example>& demonstrations,
                          const std::string& question) const;

    const std::string& coarse_template() const { return coarse_; }
    const std::string& gd_template() const { return gd_; }
    const std::map<OperationKind, std::string>& fine_templates() const { return fine_; }

    /// True when the coarse prompt demonstrates every non-connective
    /// operation and a fine prompt exists for each.
    bool covers_all_operations() const;

    bool operator==(const PromptBundle&) const = default;

private:
    std::string coarse_;
    std::string gd_;
    std::map<OperationKind, std::string> fine_;
};

/// The curated demonstrations behind the built-in templates.
const std::vector<std::pair<OperationKind, Demonstration>>& coarse_demonstrations();
const std::map<OperationKind, std::vector<Demonstration>>& fine_demonstrations();

}  // namespace coxql
