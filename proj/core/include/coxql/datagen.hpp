#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace coxql {

struct CorpusRecord {
    std::string question;
    std::string parse;
    bool operator==(const CorpusRecord&) const = default;
};

struct DatagenOptions {
    std::size_t train_size = 1179;
    std::size_t test_size = 112;
    std::uint64_t seed = 7;
};

struct GeneratedCorpus {
    std::vector<CorpusRecord> train;
    std::vector<CorpusRecord> test;
};

/// Deterministic question/parse corpus over all operations. Questions are
/// phrased so that ids, explicit top-k counts and attribution methods appear
/// in the text exactly when the gold parse carries them, test questions never
/// duplicate training ones, and every test parse also occurs in training
/// under a different phrasing.
GeneratedCorpus generate_corpus(const DatagenOptions& options = {});

std::string records_to_jsonl(const std::vector<CorpusRecord>& records);

}  // namespace coxql
