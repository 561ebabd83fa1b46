#include "svdd/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <unordered_map>

#include <json.hpp>

#include "svdd/errors.hpp"
#include "svdd/io.hpp"

namespace svdd {

namespace {

using Json = nlohmann::ordered_json;

std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

int parse_label_int(const std::string& field, std::size_t line) {
    if (field.empty()) throw DataError(at_line(line) + "empty label");
    int value = 0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw DataError(at_line(line) + "label is not an integer: \"" + field + "\"");
    if (value < 0) throw DataError(at_line(line) + "label must be >= 0, got " + field);
    return value;
}

std::vector<DatasetRecord> load_jsonl(const std::string& text) {
    std::vector<DatasetRecord> records;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        std::string line = text.substr(pos, end == std::string::npos ? std::string::npos
                                                                     : end - pos);
        pos = (end == std::string::npos) ? text.size() + 1 : end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        bool blank = line.find_first_not_of(" \t") == std::string::npos;
        if (blank) {
            if (end == std::string::npos) break;
            continue;
        }
        Json row;
        try {
            row = Json::parse(line);
        } catch (const std::exception& e) {
            throw DataError(at_line(line_no) + "invalid JSON: " + e.what());
        }
        if (!row.is_object()) throw DataError(at_line(line_no) + "row is not a JSON object");
        if (!row.contains("text") || !row["text"].is_string())
            throw DataError(at_line(line_no) + "missing string field \"text\"");
        if (!row.contains("label") || !row["label"].is_number_integer())
            throw DataError(at_line(line_no) + "missing integer field \"label\"");
        long long label = row["label"].get<long long>();
        if (label < 0)
            throw DataError(at_line(line_no) + "label must be >= 0, got " + std::to_string(label));
        DatasetRecord rec;
        rec.text = row["text"].get<std::string>();
        rec.label = static_cast<int>(label);
        if (row.contains("id")) {
            if (!row["id"].is_string())
                throw DataError(at_line(line_no) + "field \"id\" must be a string");
            rec.id = row["id"].get<std::string>();
        } else {
            rec.id = std::to_string(records.size());
        }
        records.push_back(std::move(rec));
        if (end == std::string::npos) break;
    }
    return records;
}

struct CsvRow {
    std::vector<std::string> fields;
    std::size_t line = 0;
};

// RFC-4180: quoted fields may contain commas, doubled quotes, and newlines.
std::vector<CsvRow> parse_csv_rows(const std::string& text) {
    std::vector<CsvRow> rows;
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    bool row_has_data = false;
    std::size_t line = 1;
    std::size_t row_line = 1;

    auto end_field = [&]() {
        fields.push_back(field);
        field.clear();
    };
    auto end_row = [&]() {
        end_field();
        if (fields.size() > 1 || !fields[0].empty())
            rows.push_back({fields, row_line});
        fields.clear();
        row_has_data = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                row_has_data = true;
                break;
            case ',':
                end_field();
                row_has_data = true;
                break;
            case '\r':
                break;  // handled by the following '\n'
            case '\n':
                end_row();
                ++line;
                row_line = line;
                break;
            default:
                field.push_back(c);
                row_has_data = true;
                break;
        }
    }
    if (in_quotes) throw DataError(at_line(row_line) + "unterminated quoted field");
    if (row_has_data || !field.empty() || !fields.empty()) end_row();
    return rows;
}

std::vector<DatasetRecord> load_csv(const std::string& text) {
    std::vector<DatasetRecord> records;
    std::vector<CsvRow> rows = parse_csv_rows(text);
    if (rows.empty()) return records;

    const std::vector<std::string>& header = rows[0].fields;
    bool has_id;
    if (header == std::vector<std::string>{"id", "text", "label"}) {
        has_id = true;
    } else if (header == std::vector<std::string>{"text", "label"}) {
        has_id = false;
    } else {
        throw DataError(at_line(rows[0].line) +
                        "expected header \"id,text,label\" or \"text,label\"");
    }

    for (std::size_t r = 1; r < rows.size(); ++r) {
        const CsvRow& row = rows[r];
        if (row.fields.size() != header.size())
            throw DataError(at_line(row.line) + "expected " + std::to_string(header.size()) +
                            " fields, got " + std::to_string(row.fields.size()));
        DatasetRecord rec;
        std::size_t f = 0;
        if (has_id)
            rec.id = row.fields[f++];
        else
            rec.id = std::to_string(records.size());
        rec.text = row.fields[f++];
        rec.label = parse_label_int(row.fields[f], row.line);
        records.push_back(std::move(rec));
    }
    return records;
}

void check_unique_ids(const std::vector<DatasetRecord>& records) {
    std::unordered_map<std::string, std::size_t> seen;
    seen.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto [it, inserted] = seen.emplace(records[i].id, i);
        if (!inserted)
            throw DataError("duplicate id \"" + records[i].id + "\" (records " +
                            std::to_string(it->second) + " and " + std::to_string(i) + ")");
    }
}

}  // namespace

DatasetFormat parse_dataset_format(const std::string& name) {
    if (name == "auto" || name.empty()) return DatasetFormat::auto_detect;
    if (name == "jsonl") return DatasetFormat::jsonl;
    if (name == "csv") return DatasetFormat::csv;
    throw ConfigError("unknown dataset format \"" + name + "\" (expected jsonl, csv, or auto)");
}

std::vector<DatasetRecord> load_dataset(const std::string& path, DatasetFormat format) {
    if (format == DatasetFormat::auto_detect) {
        std::string ext = std::filesystem::path(path).extension().string();
        if (ext == ".jsonl" || ext == ".ndjson")
            format = DatasetFormat::jsonl;
        else if (ext == ".csv")
            format = DatasetFormat::csv;
        else
            throw DataError("cannot infer dataset format from \"" + path +
                            "\"; pass jsonl or csv explicitly");
    }
    std::string text = read_text_file(path);
    std::vector<DatasetRecord> records =
        (format == DatasetFormat::jsonl) ? load_jsonl(text) : load_csv(text);
    check_unique_ids(records);
    return records;
}

std::map<int, std::vector<std::size_t>> partition_by_label(
    const std::vector<DatasetRecord>& records) {
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < records.size(); ++i) groups[records[i].label].push_back(i);
    return groups;
}

SplitIds split_train_test(const std::vector<DatasetRecord>& records, double test_fraction,
                          const SeededRng& rng) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw ContractError("test_fraction must lie in (0, 1), got " +
                            std::to_string(test_fraction));
    std::vector<char> is_test(records.size(), 0);
    for (auto& [label, indices] : partition_by_label(records)) {
        const std::size_t size = indices.size();
        long long want = std::llround(test_fraction * static_cast<double>(size));
        std::size_t take;
        if (size >= 2) {
            take = static_cast<std::size_t>(
                std::clamp<long long>(want, 1, static_cast<long long>(size) - 1));
        } else {
            take = 0;  // a singleton class stays in train
        }
        std::vector<std::size_t> shuffled = indices;
        SeededRng child = rng.fork(0x73706c69ULL ^ static_cast<std::uint64_t>(label));
        child.shuffle(shuffled);
        for (std::size_t i = 0; i < take; ++i) is_test[shuffled[i]] = 1;
    }
    SplitIds out;
    for (std::size_t i = 0; i < records.size(); ++i)
        (is_test[i] ? out.test : out.train).push_back(records[i].id);
    return out;
}

}  // namespace svdd
