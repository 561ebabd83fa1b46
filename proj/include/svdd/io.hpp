#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace svdd {

// Whole-file read; DataError if the file cannot be opened.
std::string read_text_file(const std::string& path);

// Writes to a temp file in the same directory, then renames over the target,
// so readers never observe a partial artifact.
void write_text_file_atomic(const std::string& path, const std::string& content);

// Current time as ISO-8601 UTC, e.g. "2026-08-16T12:34:56Z".
std::string iso_utc_now();

// value -> "65.630%" style: fixed three decimals plus a percent sign.
std::string format_percent(double percent);

// Fixed-precision float for file names: 0.6 -> "0.600".
std::string format_fixed3(double v);

std::vector<std::string> split_on(const std::string& s, char sep);

}  // namespace svdd
