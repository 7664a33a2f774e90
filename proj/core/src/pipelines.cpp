#include "coxql/pipelines.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

#include "coxql/parse.hpp"

namespace coxql {

namespace {

std::int64_t to_number(std::string_view tok) {
    std::int64_t value = 0;
    std::from_chars(tok.data(), tok.data() + tok.size(), value);
    return value;
}

// Raw model output: whitespace split, lower-cased, edge punctuation stripped,
// underscores kept.
std::vector<std::string> repair_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        std::size_t b = 0, e = cur.size();
        auto is_punct = [](char c) {
            return std::string_view(".,!?;:\"'()[]{}`*").find(c) != std::string_view::npos;
        };
        while (b < e && is_punct(cur[b])) ++b;
        while (e > b && is_punct(cur[e - 1])) --e;
        if (e > b) out.push_back(cur.substr(b, e - b));
        cur.clear();
    };
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else {
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
    }
    flush();
    return out;
}

// Question text: lower-cased alphanumeric runs, so "Top-3" and
// "input_x_gradient" split into clean words.
std::vector<std::string> question_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

// Alias resolution and multi-word method joining over repair tokens.
bool alias_pass(std::vector<std::string>& toks) {
    bool changed = false;
    std::vector<std::string> out;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (i + 2 < toks.size() && toks[i] == "input" && toks[i + 1] == "x" &&
            toks[i + 2] == "gradient") {
            out.emplace_back("input_x_gradient");
            i += 2;
            changed = true;
            continue;
        }
        if (i + 1 < toks.size() && toks[i] == "integrated" && toks[i + 1] == "gradient") {
            out.emplace_back("integrated_gradient");
            ++i;
            changed = true;
            continue;
        }
        if (i + 1 < toks.size() && toks[i] == "input" && toks[i + 1] == "gradient") {
            out.emplace_back("input_x_gradient");
            ++i;
            changed = true;
            continue;
        }
        static const std::pair<std::string_view, std::string_view> aliases[] = {
            {"similar", "similarity"},   {"tutorial", "qatutorial"},
            {"attribute", "nlpattribute"}, {"qada", "qaaugment"},
            {"inputxgradient", "input_x_gradient"},
            {"integratedgradient", "integrated_gradient"},
        };
        bool mapped = false;
        for (const auto& [from, to] : aliases) {
            if (toks[i] == from) {
                out.emplace_back(to);
                mapped = true;
                changed = true;
                break;
            }
        }
        if (!mapped) out.push_back(std::move(toks[i]));
    }
    toks = std::move(out);
    return changed;
}

struct Atom {
    SlotValue value{All{}};
    bool numberless_topk = false;
    std::size_t order = 0;
};

struct RepairFilter {
    OperationKind kind = OperationKind::Filter;
    std::vector<SlotValue> args;
    bool id_missing = false;
};

std::optional<SlotValue> classify_atom(const std::vector<std::string>& toks, std::size_t& i) {
    const std::string& tok = toks[i];
    if (tok == "all") {
        ++i;
        return SlotValue{All{}};
    }
    if (auto m = method_from_token(tok)) {
        ++i;
        return SlotValue{*m};
    }
    if (auto m = metric_from_token(tok)) {
        ++i;
        return SlotValue{*m};
    }
    if (auto m = mistake_mode_from_token(tok)) {
        ++i;
        return SlotValue{*m};
    }
    if (auto t = topic_from_token(tok)) {
        ++i;
        return SlotValue{*t};
    }
    return std::nullopt;
}

}  // namespace

RepairFlags RepairFlags::from_config(const ConfigMap& cfg) {
    RepairFlags flags;
    flags.topk_from_question = cfg.get_bool("repair.topk_from_question", true);
    return flags;
}

std::string_view repair_step_name(RepairStepKind kind) {
    switch (kind) {
        case RepairStepKind::AliasNormalize: return "alias-normalize";
        case RepairStepKind::SlotPrune: return "slot-prune";
        case RepairStepKind::Reorder: return "reorder";
        case RepairStepKind::IdInject: return "id-inject";
        case RepairStepKind::TopkInject: return "topk-inject";
        case RepairStepKind::DefaultFill: return "default-fill";
        case RepairStepKind::Validate: return "validate";
    }
    return "?";
}

bool RepairTrace::touched(RepairStepKind kind) const {
    return std::any_of(steps.begin(), steps.end(),
                       [kind](const RepairStep& s) { return s.kind == kind; });
}

std::string RepairTrace::describe() const {
    std::ostringstream os;
    os << "raw: " << raw << "\n";
    for (const RepairStep& s : steps) {
        os << "  " << repair_step_name(s.kind) << ": " << s.detail << "\n";
    }
    if (final) {
        os << "final: " << *final << "\n";
    } else {
        os << "unrepairable: " << failure << "\n";
    }
    return os.str();
}

std::optional<std::int64_t> id_from_question_text(std::string_view question) {
    std::vector<std::string> toks = question_tokens(question);
    for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
        if ((toks[i] == "id" || toks[i] == "instance") && is_number_token(toks[i + 1])) {
            return to_number(toks[i + 1]);
        }
        if (toks[i] == "data" && i + 2 < toks.size() && toks[i + 1] == "point") {
            std::size_t j = i + 2;
            if (toks[j] == "number" && j + 1 < toks.size()) ++j;
            if (is_number_token(toks[j])) return to_number(toks[j]);
        }
    }
    return std::nullopt;
}

std::optional<std::int64_t> topk_from_question_text(std::string_view question) {
    std::vector<std::string> toks = question_tokens(question);
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if ((toks[i] == "top" || toks[i] == "topk") && i + 1 < toks.size()) {
            std::size_t j = i + 1;
            if (toks[j] == "k" && j + 1 < toks.size()) ++j;
            if (is_number_token(toks[j])) {
                std::int64_t v = to_number(toks[j]);
                if (v >= 1) return v;
            }
        }
        if (is_number_token(toks[i]) && i + 1 < toks.size() && toks[i + 1] == "most") {
            std::int64_t v = to_number(toks[i]);
            if (v >= 1) return v;
        }
    }
    return std::nullopt;
}

bool question_has_superlative(std::string_view question) {
    for (const std::string& tok : question_tokens(question)) {
        if (tok == "most") return true;
    }
    return false;
}

std::optional<AttributionMethod> method_from_question_text(std::string_view question) {
    std::vector<std::string> toks = question_tokens(question);
    auto has_phrase = [&](std::initializer_list<std::string_view> phrase) {
        if (toks.size() < phrase.size()) return false;
        for (std::size_t i = 0; i + phrase.size() <= toks.size(); ++i) {
            bool all = true;
            std::size_t j = 0;
            for (std::string_view w : phrase) {
                if (toks[i + j] != w) {
                    all = false;
                    break;
                }
                ++j;
            }
            if (all) return true;
        }
        return false;
    };
    if (has_phrase({"input", "x", "gradient"}) || has_phrase({"input", "gradient"}) ||
        has_phrase({"inputxgradient"})) {
        return AttributionMethod::InputXGradient;
    }
    if (has_phrase({"integrated", "gradient"}) || has_phrase({"integrated", "gradients"})) {
        return AttributionMethod::IntegratedGradient;
    }
    if (has_phrase({"attention"})) return AttributionMethod::Attention;
    if (has_phrase({"lime"})) return AttributionMethod::Lime;
    return std::nullopt;
}

std::optional<OperationKind> extract_operation(std::string_view stage_one_output) {
    std::vector<std::string> toks = repair_tokens(stage_one_output);
    alias_pass(toks);
    for (const std::string& tok : toks) {
        auto op = operation_from_token(tok);
        if (op && !is_connective(*op)) return op;
    }
    return std::nullopt;
}

RepairTrace template_check(std::string_view raw, std::string_view question,
                           const RepairFlags& flags) {
    RepairTrace trace;
    trace.raw = std::string(raw);
    auto step = [&trace](RepairStepKind kind, std::string detail) {
        trace.steps.push_back({kind, std::move(detail)});
    };

    std::vector<std::string> toks = repair_tokens(raw);
    if (alias_pass(toks)) step(RepairStepKind::AliasNormalize, "aliases resolved");

    // Clause scan: filters in order, first main operation wins the terminal.
    std::vector<RepairFilter> filters;
    std::optional<OperationKind> terminal;
    std::vector<Atom> atoms;
    std::size_t atom_order = 0;

    std::size_t i = 0;
    while (i < toks.size()) {
        auto op = operation_from_token(toks[i]);
        if (!op || is_connective(*op)) {
            ++i;  // prose or connective glue
            continue;
        }
        if (is_filter_operation(*op)) {
            RepairFilter f;
            f.kind = *op;
            ++i;
            switch (*op) {
                case OperationKind::Filter: {
                    if (i < toks.size() && toks[i] == "id") ++i;
                    if (i < toks.size() && is_number_token(toks[i])) {
                        f.args.push_back(Id{to_number(toks[i])});
                        ++i;
                    } else {
                        f.id_missing = true;
                    }
                    filters.push_back(std::move(f));
                    break;
                }
                case OperationKind::PredFilter:
                case OperationKind::LabelFilter: {
                    if (i < toks.size() && is_word_token(toks[i]) &&
                        !operation_from_token(toks[i])) {
                        f.args.push_back(Label{toks[i]});
                        ++i;
                        filters.push_back(std::move(f));
                    } else {
                        step(RepairStepKind::SlotPrune,
                             std::string(token_for(*op)) + " without a label dropped");
                    }
                    break;
                }
                case OperationKind::Includes: {
                    if (i < toks.size() && is_word_token(toks[i]) &&
                        !operation_from_token(toks[i])) {
                        f.args.push_back(Token{toks[i]});
                        ++i;
                        filters.push_back(std::move(f));
                    } else {
                        step(RepairStepKind::SlotPrune, "includes without a token dropped");
                    }
                    break;
                }
                case OperationKind::LengthFilter: {
                    std::optional<LengthLevel> level;
                    std::optional<LengthCmp> cmp;
                    if (i < toks.size()) level = length_level_from_token(toks[i]);
                    if (level) ++i;
                    if (i < toks.size()) cmp = length_cmp_from_token(toks[i]);
                    if (cmp) ++i;
                    if (level && cmp && i < toks.size() && is_number_token(toks[i]) &&
                        to_number(toks[i]) >= 1) {
                        f.args.push_back(LengthSpec{*level, *cmp, to_number(toks[i])});
                        ++i;
                        filters.push_back(std::move(f));
                    } else {
                        step(RepairStepKind::SlotPrune, "malformed lengthfilter dropped");
                    }
                    break;
                }
                case OperationKind::PreviousFilter:
                    filters.push_back(std::move(f));
                    break;
                default:
                    break;
            }
            continue;
        }
        // Main operation clause.
        if (terminal) {
            step(RepairStepKind::SlotPrune,
                 "extra operation '" + std::string(token_for(*op)) + "' dropped");
            ++i;
            continue;
        }
        terminal = *op;
        ++i;
        while (i < toks.size() && !operation_from_token(toks[i])) {
            if (toks[i] == "topk" || toks[i] == "top") {
                Atom a;
                a.order = atom_order++;
                if (i + 1 < toks.size() && is_number_token(toks[i + 1]) &&
                    to_number(toks[i + 1]) >= 1) {
                    a.value = TopK{to_number(toks[i + 1])};
                    i += 2;
                } else {
                    a.numberless_topk = true;
                    ++i;
                }
                atoms.push_back(a);
                continue;
            }
            std::size_t before = i;
            if (auto v = classify_atom(toks, i)) {
                atoms.push_back({*v, false, atom_order++});
                continue;
            }
            i = before;
            step(RepairStepKind::SlotPrune, "dropped stray token '" + toks[i] + "'");
            ++i;
        }
    }

    // A query that is only filters keeps its last filter as the terminal.
    std::vector<SlotValue> terminal_slots_direct;
    bool terminal_is_filter = false;
    bool terminal_filter_id_missing = false;
    if (!terminal) {
        if (filters.empty()) {
            trace.failure = "no operation token found";
            step(RepairStepKind::Validate, trace.failure);
            return trace;
        }
        RepairFilter last = std::move(filters.back());
        filters.pop_back();
        terminal = last.kind;
        terminal_slots_direct = std::move(last.args);
        terminal_filter_id_missing = last.id_missing;
        terminal_is_filter = true;
    }

    const OperationSpec& spec = spec_for(*terminal);
    std::vector<SlotValue> slots;

    if (terminal_is_filter) {
        if (terminal_filter_id_missing) {
            if (auto qid = id_from_question_text(question)) {
                terminal_slots_direct.clear();
                terminal_slots_direct.push_back(Id{*qid});
                step(RepairStepKind::IdInject,
                     "id " + std::to_string(*qid) + " recovered from question");
            }
        }
        slots = std::move(terminal_slots_direct);
    } else {
        // Prune atoms illegal for the terminal, assign the rest to schema
        // positions keeping the first occurrence per position.
        std::vector<std::optional<Atom>> assigned(spec.positions.size());
        for (const Atom& atom : atoms) {
            bool placed = false;
            for (std::size_t p = 0; p < spec.positions.size() && !placed; ++p) {
                SlotClass cls =
                    atom.numberless_topk ? SlotClass::TopK : slot_class(atom.value);
                if (std::find(spec.positions[p].allowed.begin(),
                              spec.positions[p].allowed.end(),
                              cls) == spec.positions[p].allowed.end()) {
                    continue;
                }
                if (assigned[p]) continue;
                assigned[p] = atom;
                placed = true;
            }
            if (!placed) {
                step(RepairStepKind::SlotPrune,
                     "slot '" + (atom.numberless_topk ? std::string("topk")
                                                      : render_slot(atom.value)) +
                         "' pruned");
            }
        }

        // Attribution methods must be grounded in the question.
        if (*terminal == OperationKind::NlpAttribute) {
            std::size_t method_pos = 1;
            auto grounded = method_from_question_text(question);
            if (grounded) {
                if (!assigned[method_pos] ||
                    assigned[method_pos]->value != SlotValue{*grounded}) {
                    step(RepairStepKind::SlotPrune,
                         "method aligned with question: " +
                             std::string(token_for(*grounded)));
                    assigned[method_pos] = Atom{SlotValue{*grounded}, false, atom_order++};
                }
            } else if (assigned[method_pos] &&
                       assigned[method_pos]->value != SlotValue{AttributionMethod::Default}) {
                step(RepairStepKind::SlotPrune,
                     "method '" + render_slot(assigned[method_pos]->value) +
                         "' not grounded in question");
                assigned[method_pos].reset();
            }
        }

        // Canonical order; note when the raw order differed.
        std::vector<std::size_t> seen_orders;
        for (const auto& a : assigned) {
            if (a && !a->numberless_topk) seen_orders.push_back(a->order);
        }
        if (!std::is_sorted(seen_orders.begin(), seen_orders.end())) {
            step(RepairStepKind::Reorder, "slots reordered to schema order");
        }

        // Instance id recovery from the question.
        if (spec.requires_instance_filter) {
            for (RepairFilter& f : filters) {
                if (f.kind == OperationKind::Filter && f.id_missing) {
                    if (auto qid = id_from_question_text(question)) {
                        f.args.assign(1, Id{*qid});
                        f.id_missing = false;
                        step(RepairStepKind::IdInject,
                             "filter id " + std::to_string(*qid) + " number recovered");
                    }
                }
            }
            if (filters.empty()) {
                if (auto qid = id_from_question_text(question)) {
                    RepairFilter f;
                    f.kind = OperationKind::Filter;
                    f.args.push_back(Id{*qid});
                    filters.insert(filters.begin(), std::move(f));
                    step(RepairStepKind::IdInject,
                         "filter id " + std::to_string(*qid) + " injected from question");
                }
            }
        }

        // Top-k recovery and numberless repair.
        std::size_t topk_pos = spec.positions.size();
        for (std::size_t p = 0; p < spec.positions.size(); ++p) {
            if (std::find(spec.positions[p].allowed.begin(), spec.positions[p].allowed.end(),
                          SlotClass::TopK) != spec.positions[p].allowed.end()) {
                topk_pos = p;
                break;
            }
        }
        if (topk_pos < spec.positions.size()) {
            auto& cur = assigned[topk_pos];
            std::optional<std::int64_t> k;
            if (flags.topk_from_question) k = topk_from_question_text(question);
            if (k) {
                if (!cur || cur->numberless_topk || cur->value != SlotValue{TopK{*k}}) {
                    step(RepairStepKind::TopkInject,
                         "topk " + std::to_string(*k) + " taken from question");
                    cur = Atom{SlotValue{TopK{*k}}, false, atom_order++};
                }
            } else if (cur && cur->numberless_topk) {
                if (flags.topk_from_question && question_has_superlative(question)) {
                    step(RepairStepKind::TopkInject, "superlative question implies topk 1");
                    cur = Atom{SlotValue{TopK{1}}, false, cur->order};
                } else {
                    step(RepairStepKind::SlotPrune, "topk without a count pruned");
                    cur.reset();
                }
            }
        }
        for (auto& a : assigned) {
            if (a && a->numberless_topk) {
                step(RepairStepKind::SlotPrune, "topk without a count pruned");
                a.reset();
            }
        }

        // Remaining unset positions take their schema defaults.
        std::vector<std::string> filled;
        for (std::size_t p = 0; p < spec.positions.size(); ++p) {
            if (assigned[p]) {
                slots.push_back(assigned[p]->value);
            } else if (spec.positions[p].preset_default) {
                slots.push_back(*spec.positions[p].preset_default);
                filled.push_back(spec.positions[p].name);
            }
        }
        if (!filled.empty()) {
            std::string detail = "defaults for";
            for (const std::string& name : filled) detail += ' ' + name;
            step(RepairStepKind::DefaultFill, detail);
        }
    }

    QueryAst ast;
    ast.terminal = *terminal;
    ast.slots = std::move(slots);
    for (RepairFilter& f : filters) {
        if (f.id_missing) continue;  // unrecoverable numberless id
        ast.filters.push_back({FilterClause{f.kind, std::move(f.args)}, Connective::And});
    }

    ValidationReport report = validate(ast);
    if (!report.ok()) {
        trace.failure = report.summary();
        step(RepairStepKind::Validate, trace.failure);
        return trace;
    }
    trace.final = canonicalize(ast);
    step(RepairStepKind::Validate, "ok");
    return trace;
}

Prediction gd_parse(const std::string& question, GenerationBackend& backend,
                    const Grammar& grammar, const NearestNeighborIndex& train_index,
                    const PromptBundle& prompts, std::size_t shots) {
    std::vector<Example> demos;
    for (const ScoredExample& s : train_index.rank(question, shots)) demos.push_back(*s.example);
    std::string prompt = prompts.render_gd(demos, question);

    if (const TerminalScorer* scorer = backend.terminal_scorer()) {
        try {
            std::string text = constrained_decode(*scorer, grammar, prompt);
            return {text, true, "gd/constrained"};
        } catch (const DecodeError& e) {
            return {"", false, std::string("gd/decode-error: ") + e.what()};
        }
    }
    std::string raw = backend.complete(prompt, {"\n"}, 0);
    bool valid = normalize_query(raw).has_value();
    return {raw, valid, valid ? "gd/validated" : "gd/unparseable"};
}

Prediction gd_parse(const std::string& question, GenerationBackend& backend,
                    const Grammar& grammar, const Dataset& train, const PromptBundle& prompts,
                    std::size_t shots, const EmbeddingBackend& embedder) {
    NearestNeighborIndex index(train, embedder);
    return gd_parse(question, backend, grammar, index, prompts, shots);
}

Prediction mp_parse(const std::string& question, GenerationBackend& backend,
                    const PromptBundle& prompts) {
    std::string stage_one = backend.complete(prompts.render_coarse(question), {"\n"}, 16);
    auto op = extract_operation(stage_one);
    if (!op) {
        return {stage_one, false, "mp/stage1-unknown-operation"};
    }
    std::string raw = backend.complete(prompts.render_fine(*op, question), {"\n"}, 0);
    bool valid = normalize_query(raw).has_value();
    return {raw, valid, "mp/stage1=" + std::string(token_for(*op))};
}

Prediction mp_plus_parse(const std::string& question, GenerationBackend& backend,
                         const PromptBundle& prompts, const RepairFlags& flags,
                         RepairTrace* trace_out) {
    Prediction mp = mp_parse(question, backend, prompts);
    RepairTrace trace = template_check(mp.text, question, flags);
    if (trace_out) *trace_out = trace;
    if (trace.ok()) {
        return {*trace.final, true, "mp+/repaired"};
    }
    return {mp.text, false, "mp+/unrepairable: " + trace.failure};
}

}  // namespace coxql
