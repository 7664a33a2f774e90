#include "coxql/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "coxql/parse.hpp"

namespace coxql {

using nlohmann::json;

std::string_view split_name(Split s) {
    return s == Split::Train ? "train" : "test";
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

namespace {

std::string hex64(std::uint64_t v) {
    static const char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

struct RawRecord {
    std::string question;
    std::string parse;
    std::string error;
};

RawRecord read_record(const std::string& line, bool json_format) {
    RawRecord rec;
    if (json_format) {
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            rec.error = "malformed json";
            return rec;
        }
        if (!j.contains("question") || !j.contains("parse") || !j["question"].is_string() ||
            !j["parse"].is_string()) {
            rec.error = "missing question/parse fields";
            return rec;
        }
        rec.question = j["question"].get<std::string>();
        rec.parse = j["parse"].get<std::string>();
        return rec;
    }
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
        rec.error = "expected question<TAB>parse";
        return rec;
    }
    rec.question = line.substr(0, tab);
    rec.parse = line.substr(tab + 1);
    return rec;
}

}  // namespace

Dataset parse_dataset(std::string_view content, Split split, const std::string& origin) {
    Dataset ds;
    ds.provenance.path = origin;
    ds.provenance.content_hash = hex64(fnv1a64(content));

    std::istringstream is{std::string(content)};
    std::string line;
    std::size_t line_no = 0;
    bool format_known = false;
    bool json_format = true;
    std::set<std::pair<std::string, std::string>> seen;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!format_known) {
            json_format = line.front() == '{';
            format_known = true;
        }
        RawRecord rec = read_record(line, json_format);
        if (!rec.error.empty()) {
            ds.rejects.push_back({line_no, line, rec.error});
            continue;
        }
        ParseResult parsed = parse_query(rec.parse);
        if (!parsed.ok()) {
            ds.rejects.push_back({line_no, line, "gold parse: " + parsed.error->message()});
            continue;
        }
        Example ex;
        ex.question = rec.question;
        ex.raw_parse = rec.parse;
        ex.gold_parse = canonicalize(*parsed.ast);
        ex.intent = parsed.ast->terminal;
        ex.category = category_of(ex.intent);
        ex.split = split;
        if (!seen.insert({ex.question, ex.gold_parse}).second) {
            ds.rejects.push_back({line_no, line, "duplicate (question, parse) pair"});
            continue;
        }
        ds.examples.push_back(std::move(ex));
    }
    if (ds.examples.empty()) {
        throw EmptyDatasetError(origin + ": no usable records");
    }
    return ds;
}

Dataset load_dataset(const std::string& path, Split split) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_dataset(buf.str(), split, path);
}

std::string dump_dataset(const Dataset& ds) {
    std::string out;
    for (const Example& ex : ds.examples) {
        json j{{"question", ex.question}, {"parse", ex.gold_parse}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::map<OperationKind, std::size_t> intent_distribution(const Dataset& ds) {
    std::map<OperationKind, std::size_t> counts;
    for (const Example& ex : ds.examples) ++counts[ex.intent];
    return counts;
}

std::map<Category, std::size_t> category_distribution(const Dataset& ds) {
    std::map<Category, std::size_t> counts;
    for (const Example& ex : ds.examples) ++counts[ex.category];
    return counts;
}

std::string dataset_stats_text(const Dataset& ds) {
    std::ostringstream os;
    os << "examples: " << ds.examples.size() << "\n";
    os << "rejects:  " << ds.rejects.size() << "\n";
    os << "source:   " << ds.provenance.path << " (fnv1a64 " << ds.provenance.content_hash
       << ")\n\n";

    auto intents = intent_distribution(ds);
    std::vector<std::pair<OperationKind, std::size_t>> sorted(intents.begin(), intents.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    os << "intent distribution:\n";
    for (const auto& [op, count] : sorted) {
        os << "  " << token_for(op) << ": " << count << "\n";
    }
    os << "\ncategory distribution:\n";
    for (const auto& [cat, count] : category_distribution(ds)) {
        os << "  " << category_name(cat) << ": " << count << "\n";
    }
    return os.str();
}

std::string dataset_stats_json(const Dataset& ds) {
    json j;
    j["examples"] = ds.examples.size();
    j["rejects"] = ds.rejects.size();
    j["source"] = ds.provenance.path;
    j["content_hash"] = ds.provenance.content_hash;
    json intents = json::object();
    for (const auto& [op, count] : intent_distribution(ds)) {
        intents[std::string(token_for(op))] = count;
    }
    j["intents"] = intents;
    json cats = json::object();
    for (const auto& [cat, count] : category_distribution(ds)) {
        cats[std::string(category_name(cat))] = count;
    }
    j["categories"] = cats;
    return j.dump(2);
}

}  // namespace coxql
