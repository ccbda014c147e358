#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace zsl {

// File-system level failures (missing file, unwritable path).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed content in an otherwise readable file.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// 17 significant digits; round-trips a double bit-exactly through
// parse_double.
std::string format_g17(double v);

// Strict full-token parses. Non-finite literals and trailing junk are rejected.
double parse_double(const std::string& token, const std::string& context);
long long parse_int(const std::string& token, const std::string& context);

std::vector<std::string> split_csv(const std::string& line);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace zsl
