#include "coxql/backend.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "coxql/parse.hpp"
#include "http_util.hpp"

namespace coxql {

using nlohmann::json;

BackendConfig BackendConfig::from_config(const ConfigMap& cfg) {
    BackendConfig out;
    out.endpoint = cfg.get_or("backend.endpoint", cfg.get_or("endpoint", ""));
    out.model = cfg.get_or("backend.model", cfg.get_or("model", "local"));
    out.api_key_env = cfg.get_or("backend.api_key_env", cfg.get_or("api_key_env", "COXQL_API_KEY"));
    out.timeout_seconds =
        cfg.get_double("backend.timeout_seconds", cfg.get_double("timeout_seconds", 30.0));
    out.max_concurrency =
        cfg.get_int("backend.max_concurrency", cfg.get_int("max_concurrency", 1));
    out.max_tokens = cfg.get_int("backend.max_tokens", cfg.get_int("max_tokens", 64));
    out.chat_format = cfg.get_bool("backend.chat_format", cfg.get_bool("chat_format", false));
    return out;
}

namespace {

std::string trim_copy(std::string s) {
    auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && issp(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
    while (!s.empty() && issp(static_cast<unsigned char>(s.back()))) s.pop_back();
    return s;
}

std::string truncate_at_stop(std::string text, const std::vector<std::string>& stop) {
    for (const std::string& s : stop) {
        if (s.empty()) continue;
        auto pos = text.find(s);
        if (pos != std::string::npos) text.erase(pos);
    }
    return text;
}

}  // namespace

std::string http_complete(const BackendConfig& cfg, const std::string& prompt,
                          const std::vector<std::string>& stop, int max_tokens) {
    if (cfg.endpoint.empty()) {
        throw BackendError(BackendError::Kind::Transport, "backend.endpoint not configured");
    }
    json body;
    body["model"] = cfg.model;
    body["temperature"] = 0;
    body["max_tokens"] = max_tokens > 0 ? max_tokens : cfg.max_tokens;
    if (!stop.empty()) body["stop"] = stop;
    if (cfg.chat_format) {
        body["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});
    } else {
        body["prompt"] = prompt;
    }

    std::string key;
    if (!cfg.api_key_env.empty()) {
        if (const char* v = std::getenv(cfg.api_key_env.c_str())) key = v;
    }
    json reply = http_post_json(cfg.endpoint, body, cfg.timeout_seconds, key);

    if (!reply.contains("choices") || !reply["choices"].is_array() || reply["choices"].empty()) {
        throw BackendError(BackendError::Kind::MalformedResponse, "reply has no choices");
    }
    const json& choice = reply["choices"][0];
    std::string text;
    if (cfg.chat_format) {
        if (!choice.contains("message") || !choice["message"].contains("content") ||
            !choice["message"]["content"].is_string()) {
            throw BackendError(BackendError::Kind::MalformedResponse, "chat reply has no content");
        }
        text = choice["message"]["content"].get<std::string>();
    } else {
        if (!choice.contains("text") || !choice["text"].is_string()) {
            throw BackendError(BackendError::Kind::MalformedResponse, "reply choice has no text");
        }
        text = choice["text"].get<std::string>();
    }
    return trim_copy(truncate_at_stop(std::move(text), stop));
}

OracleBackend::OracleBackend(const Dataset& mapped) {
    for (const Example& ex : mapped.examples) {
        mapping_.emplace_back(ex.question, ex.gold_parse);
    }
}

OracleBackend::OracleBackend(std::vector<std::pair<std::string, std::string>> mapping)
    : mapping_(std::move(mapping)) {}

const std::string& OracleBackend::lookup(const std::string& prompt) const {
    // Prompt templates place the user question on the last "Question:" line.
    std::string lowered = prompt;
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    auto marker = lowered.rfind("question:");
    if (marker != std::string::npos) {
        std::size_t begin = marker + 9;
        std::size_t end = prompt.find('\n', begin);
        std::string question =
            trim_copy(prompt.substr(begin, end == std::string::npos ? end : end - begin));
        for (const auto& [q, parse] : mapping_) {
            if (q == question) return parse;
        }
    }
    // Fallback: latest mapped question appearing anywhere in the prompt.
    const std::string* best = nullptr;
    std::size_t best_pos = 0;
    for (const auto& [q, parse] : mapping_) {
        auto pos = prompt.rfind(q);
        if (pos == std::string::npos) continue;
        if (!best || pos > best_pos) {
            best = &parse;
            best_pos = pos;
        }
    }
    if (best) return *best;
    throw BackendError(BackendError::Kind::UnmappedQuestion,
                       "no mapped question found in prompt");
}

std::string OracleBackend::complete(const std::string& prompt, const std::vector<std::string>&,
                                    int) {
    return lookup(prompt);
}

std::vector<ScoredTerminal> OracleBackend::score_terminals(
    const std::string& prompt, const std::string& partial,
    const std::vector<TerminalCandidate>& candidates) const {
    const std::string& gold = lookup(prompt);
    std::vector<std::string> gold_toks = tokenize_query(gold);
    std::vector<std::string> done = tokenize_query(partial);

    bool on_track = done.size() <= gold_toks.size() &&
                    std::equal(done.begin(), done.end(), gold_toks.begin());
    std::vector<ScoredTerminal> out(candidates.size());
    if (!on_track) return out;

    bool finished = done.size() == gold_toks.size();
    const std::string* next = finished ? nullptr : &gold_toks[done.size()];
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const TerminalCandidate& cand = candidates[i];
        switch (cand.kind) {
            case TerminalCandidate::Kind::End:
                out[i].score = finished ? 1.0 : 0.0;
                break;
            case TerminalCandidate::Kind::Literal:
                out[i].score = next && cand.text == *next ? 1.0 : 0.0;
                break;
            case TerminalCandidate::Kind::Number:
            case TerminalCandidate::Kind::Id:
                if (next && is_number_token(*next)) {
                    out[i].score = 1.0;
                    out[i].literal = *next;
                }
                break;
            case TerminalCandidate::Kind::Word:
                if (next && is_word_token(*next)) {
                    out[i].score = 1.0;
                    out[i].literal = *next;
                }
                break;
        }
    }
    return out;
}

std::string_view corruption_class_name(CorruptionClass c) {
    switch (c) {
        case CorruptionClass::SlotOrderSwap: return "slot_order_swap";
        case CorruptionClass::DefaultOmission: return "default_omission";
        case CorruptionClass::ExtraMetric: return "extra_metric";
        case CorruptionClass::WrongMethodName: return "wrong_method_name";
        case CorruptionClass::MissingTopK: return "missing_topk";
        case CorruptionClass::MissingId: return "missing_id";
    }
    return "?";
}

std::optional<CorruptionClass> corruption_class_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kCorruptionClassCount; ++i) {
        auto c = static_cast<CorruptionClass>(i);
        if (corruption_class_name(c) == name) return c;
    }
    return std::nullopt;
}

CorruptionProfile CorruptionProfile::single(CorruptionClass c, std::uint64_t seed) {
    CorruptionProfile p;
    p.rates[c] = 1.0;
    p.seed = seed;
    return p;
}

CorruptionProfile CorruptionProfile::all(double rate, std::uint64_t seed) {
    CorruptionProfile p;
    for (std::size_t i = 0; i < kCorruptionClassCount; ++i) {
        p.rates[static_cast<CorruptionClass>(i)] = rate;
    }
    p.seed = seed;
    p.check();
    return p;
}

CorruptionProfile CorruptionProfile::from_json(std::string_view text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw std::invalid_argument("corruption profile must be a json object");
    }
    CorruptionProfile p;
    p.seed = j.value("seed", 0ull);
    if (j.contains("rates")) {
        for (const auto& [name, value] : j["rates"].items()) {
            auto c = corruption_class_from_name(name);
            if (!c) throw std::invalid_argument("unknown corruption class: " + name);
            p.rates[*c] = value.get<double>();
        }
    }
    p.check();
    return p;
}

CorruptionProfile CorruptionProfile::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open profile " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

std::string CorruptionProfile::to_json() const {
    json rates = json::object();
    for (const auto& [c, rate] : this->rates) {
        rates[std::string(corruption_class_name(c))] = rate;
    }
    return json{{"seed", seed}, {"rates", rates}}.dump(2);
}

void CorruptionProfile::check() const {
    for (const auto& [c, rate] : rates) {
        if (rate < 0.0 || rate > 1.0) {
            throw std::invalid_argument("rate for " +
                                        std::string(corruption_class_name(c)) +
                                        " outside [0,1]");
        }
    }
}

bool corruption_applicable(CorruptionClass c, const QueryAst& gold) {
    const OperationSpec& spec = spec_for(gold.terminal);
    switch (c) {
        case CorruptionClass::SlotOrderSwap:
            return gold.slots.size() >= 2;
        case CorruptionClass::DefaultOmission:
            for (std::size_t i = 0; i < gold.slots.size() && i < spec.positions.size(); ++i) {
                if (spec.positions[i].preset_default &&
                    *spec.positions[i].preset_default == gold.slots[i]) {
                    return true;
                }
            }
            return false;
        case CorruptionClass::ExtraMetric:
            return gold.terminal == OperationKind::Score;
        case CorruptionClass::WrongMethodName:
            return gold.terminal == OperationKind::NlpAttribute && gold.slots.size() == 2 &&
                   gold.slots[1] == SlotValue{AttributionMethod::Default};
        case CorruptionClass::MissingTopK:
            return std::any_of(gold.slots.begin(), gold.slots.end(), [](const SlotValue& s) {
                return std::holds_alternative<TopK>(s);
            });
        case CorruptionClass::MissingId:
            return std::any_of(gold.filters.begin(), gold.filters.end(), [](const FilterLink& l) {
                return l.clause.kind == OperationKind::Filter;
            });
    }
    return false;
}

std::string apply_corruptions(const std::string& canonical_gold,
                              const CorruptionProfile& profile) {
    ParseResult parsed = parse_query(canonical_gold);
    if (!parsed.ok()) return canonical_gold;
    const QueryAst& ast = *parsed.ast;
    const OperationSpec& spec = spec_for(ast.terminal);

    std::mt19937_64 rng(profile.seed ^ fnv1a64(canonical_gold) ^ 0x9e3779b97f4a7c15ull);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    bool active[kCorruptionClassCount] = {};
    for (std::size_t i = 0; i < kCorruptionClassCount; ++i) {
        auto c = static_cast<CorruptionClass>(i);
        double draw = uniform(rng);  // always consumed, keeps draws aligned
        auto it = profile.rates.find(c);
        double rate = it == profile.rates.end() ? 0.0 : it->second;
        active[i] = rate > 0.0 && draw < rate && corruption_applicable(c, ast);
    }
    auto on = [&](CorruptionClass c) { return active[static_cast<std::size_t>(c)]; };

    std::vector<std::string> parts;
    for (const FilterLink& link : ast.filters) {
        if (on(CorruptionClass::MissingId) && link.clause.kind == OperationKind::Filter) continue;
        std::string clause(token_for(link.clause.kind));
        for (const SlotValue& arg : link.clause.args) clause += ' ' + render_slot(arg);
        parts.push_back(std::move(clause));
        parts.emplace_back(token_for(link.conn));
    }
    parts.emplace_back(token_for(ast.terminal));

    std::vector<std::string> slot_parts;
    for (std::size_t i = 0; i < ast.slots.size(); ++i) {
        SlotValue value = ast.slots[i];
        if (on(CorruptionClass::WrongMethodName) &&
            value == SlotValue{AttributionMethod::Default}) {
            value = rng() % 2 ? SlotValue{AttributionMethod::Lime}
                              : SlotValue{AttributionMethod::Attention};
        }
        if (on(CorruptionClass::DefaultOmission) && i < spec.positions.size() &&
            spec.positions[i].preset_default && *spec.positions[i].preset_default == value) {
            continue;
        }
        if (on(CorruptionClass::MissingTopK) && std::holds_alternative<TopK>(value)) {
            slot_parts.emplace_back("topk");
            continue;
        }
        slot_parts.push_back(render_slot(value));
    }
    if (on(CorruptionClass::SlotOrderSwap)) {
        std::reverse(slot_parts.begin(), slot_parts.end());
    }
    if (on(CorruptionClass::ExtraMetric)) {
        Metric present = ast.slots.empty() ? Metric::Accuracy : std::get<Metric>(ast.slots[0]);
        Metric extra = present;
        while (extra == present) extra = static_cast<Metric>(rng() % 5);
        slot_parts.emplace_back(token_for(extra));
    }
    for (std::string& s : slot_parts) parts.push_back(std::move(s));

    std::string out;
    for (const std::string& p : parts) {
        if (!out.empty()) out += ' ';
        out += p;
    }
    return out;
}

CorruptingBackend::CorruptingBackend(const OracleBackend& inner, CorruptionProfile profile)
    : inner_(&inner), profile_(std::move(profile)) {
    profile_.check();
}

std::string CorruptingBackend::complete(const std::string& prompt,
                                        const std::vector<std::string>&, int) {
    return apply_corruptions(inner_->lookup(prompt), profile_);
}

}  // namespace coxql
