#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coxql/backend.hpp"
#include "coxql/config.hpp"
#include "coxql/grammar.hpp"
#include "coxql/prompts.hpp"
#include "coxql/retrieval.hpp"

namespace coxql {

/// Switches for the template-checking repair pass (config namespace
/// `repair.*`). With topk_from_question off, an explicit top-k count in the
/// question is never copied into the parse.
struct RepairFlags {
    bool topk_from_question = true;
    static RepairFlags from_config(const ConfigMap& cfg);
};

enum class RepairStepKind : std::uint8_t {
    AliasNormalize,
    SlotPrune,
    Reorder,
    IdInject,
    TopkInject,
    DefaultFill,
    Validate,
};

std::string_view repair_step_name(RepairStepKind kind);

struct RepairStep {
    RepairStepKind kind;
    std::string detail;
};

/// What the template check did to one raw model output. `final` is set when
/// the repaired string validates; otherwise `failure` names the reason.
struct RepairTrace {
    std::string raw;
    std::vector<RepairStep> steps;
    std::optional<std::string> final;
    std::string failure;
    bool ok() const { return final.has_value(); }
    bool touched(RepairStepKind kind) const;
    std::string describe() const;
};

/// Deterministic repair of a raw parse against the grammar and the question:
/// alias normalization, slot pruning/deduplication, canonical reordering,
/// id and top-k recovery from the question text, default filling, validation.
RepairTrace template_check(std::string_view raw, std::string_view question,
                           const RepairFlags& flags = {});

/// First known operation token in a stage-one reply, alias-resolved.
std::optional<OperationKind> extract_operation(std::string_view stage_one_output);

/// Question-side extractors used by the repair pass (exposed for tests).
std::optional<std::int64_t> topk_from_question_text(std::string_view question);
std::optional<std::int64_t> id_from_question_text(std::string_view question);
std::optional<AttributionMethod> method_from_question_text(std::string_view question);
bool question_has_superlative(std::string_view question);

struct Prediction {
    std::string text;
    bool valid = false;
    std::string note;
};

/// Guided decoding: retrieval-selected demonstrations plus the grammar. A
/// scoring backend is decoded under the grammar mask; a plain completion
/// backend is validated after the fact.
Prediction gd_parse(const std::string& question, GenerationBackend& backend,
                    const Grammar& grammar, const NearestNeighborIndex& train_index,
                    const PromptBundle& prompts, std::size_t shots = 20);
Prediction gd_parse(const std::string& question, GenerationBackend& backend,
                    const Grammar& grammar, const Dataset& train, const PromptBundle& prompts,
                    std::size_t shots = 20,
                    const EmbeddingBackend& embedder = default_embedder());

/// Multi-prompt parsing, stage one (operation) then stage two (full parse);
/// the stage-two text is returned unrepaired.
Prediction mp_parse(const std::string& question, GenerationBackend& backend,
                    const PromptBundle& prompts);

/// mp_parse followed by template_check. On unrepairable output the raw text
/// is returned marked invalid.
Prediction mp_plus_parse(const std::string& question, GenerationBackend& backend,
                         const PromptBundle& prompts, const RepairFlags& flags = {},
                         RepairTrace* trace_out = nullptr);

}  // namespace coxql
