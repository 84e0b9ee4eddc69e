#pragma once

#include <string>
#include <vector>

namespace netobs {

// Full-precision round-trippable formatting (%.17g).
std::string format_double(double value);

std::string join_csv_row(const std::vector<std::string>& cells);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// Minimal CSV splitting for our own files (no quoting in any schema we emit).
std::vector<std::string> split_csv_row(const std::string& line);

}  // namespace netobs
