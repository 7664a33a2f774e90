#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "coxql/ops.hpp"

namespace coxql {

enum class Split : std::uint8_t { Train, Test };

std::string_view split_name(Split s);

/// One (question, gold parse) record. Intent and category are derived from
/// the parsed gold, never stored independently.
struct Example {
    std::string question;
    std::string gold_parse;  // canonical form
    std::string raw_parse;   // as read from the file, for audit
    OperationKind intent = OperationKind::CountData;
    Category category = Category::Data;
    Split split = Split::Train;

    bool operator==(const Example& other) const {
        return question == other.question && gold_parse == other.gold_parse &&
               intent == other.intent && category == other.category && split == other.split;
    }
};

struct DatasetProvenance {
    std::string path;
    std::string content_hash;  // fnv1a-64 of the raw bytes, hex
};

struct RejectedRecord {
    std::size_t line = 0;
    std::string raw;
    std::string reason;
};

struct Dataset {
    std::vector<Example> examples;
    DatasetProvenance provenance;
    std::vector<RejectedRecord> rejects;

    std::size_t size() const { return examples.size(); }
    bool operator==(const Dataset& other) const { return examples == other.examples; }
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

class EmptyDatasetError : public std::runtime_error {
public:
    explicit EmptyDatasetError(const std::string& what) : std::runtime_error(what) {}
};

/// Loads line-delimited records. Each line is either a JSON object with
/// `question` and `parse` fields or a two-column question<TAB>parse row;
/// the format is detected per file. Gold parses are normalized through the
/// query parser; malformed records land in the rejects report instead of
/// aborting the load. Duplicate (question, parse) pairs are dropped.
Dataset load_dataset(const std::string& path, Split split);

/// Parses records from an in-memory buffer (same formats as load_dataset).
Dataset parse_dataset(std::string_view content, Split split, const std::string& origin = "<memory>");

/// One JSON record per line; load(dump(ds)) == ds.
std::string dump_dataset(const Dataset& ds);

std::map<OperationKind, std::size_t> intent_distribution(const Dataset& ds);
std::map<Category, std::size_t> category_distribution(const Dataset& ds);

/// Human-readable statistics block (counts, intent and category histograms).
std::string dataset_stats_text(const Dataset& ds);
/// Same statistics as a JSON object.
std::string dataset_stats_json(const Dataset& ds);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace coxql
