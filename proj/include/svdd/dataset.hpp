#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "svdd/rng.hpp"

namespace svdd {

struct DatasetRecord {
    std::string id;
    std::string text;
    int label = 0;  // class id, >= 0; need not be contiguous
};

enum class DatasetFormat { auto_detect, jsonl, csv };

DatasetFormat parse_dataset_format(const std::string& name);  // "auto" | "jsonl" | "csv"

// Loads a labeled text dataset.
//   jsonl: one object per line: {"id"?: string, "text": string, "label": int>=0}
//   csv:   RFC-4180, header "id,text,label" or "text,label"
// Missing ids become the zero-based record index, rendered in decimal.
// Malformed rows, non-integer or negative labels, and duplicate ids raise
// DataError naming the line.  An empty file yields an empty list.
std::vector<DatasetRecord> load_dataset(const std::string& path,
                                        DatasetFormat format = DatasetFormat::auto_detect);

// Record indices grouped by label, labels in ascending order; every record
// appears in exactly one group.
std::map<int, std::vector<std::size_t>> partition_by_label(
    const std::vector<DatasetRecord>& records);

struct SplitIds {
    std::vector<std::string> train;
    std::vector<std::string> test;
};

// Stratified split: per label, llround(test_fraction * class_size) records go
// to test (at least 1 and at most size-1 when the class has >= 2 records).
// Selection is driven by per-label forked sub-streams of `rng`, so the result
// depends only on (records, fraction, seed).  Both id lists preserve dataset
// order.  test_fraction must lie in (0, 1).
SplitIds split_train_test(const std::vector<DatasetRecord>& records, double test_fraction,
                          const SeededRng& rng);

}  // namespace svdd
