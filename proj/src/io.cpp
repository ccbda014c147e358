#include "zsl/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace zsl {

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& token, const std::string& context) {
    if (token.empty()) throw ParseError(context + ": empty numeric field");
    if (std::isspace(static_cast<unsigned char>(token.front())))
        throw ParseError(context + ": bad numeric literal '" + token + "'");
    const char* begin = token.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end != begin + token.size())
        throw ParseError(context + ": bad numeric literal '" + token + "'");
    if (!std::isfinite(v))
        throw ParseError(context + ": non-finite value '" + token + "'");
    return v;
}

long long parse_int(const std::string& token, const std::string& context) {
    if (token.empty()) throw ParseError(context + ": empty integer field");
    if (std::isspace(static_cast<unsigned char>(token.front())))
        throw ParseError(context + ": bad integer literal '" + token + "'");
    const char* begin = token.c_str();
    char* end = nullptr;
    const long long v = std::strtoll(begin, &end, 10);
    if (end != begin + token.size())
        throw ParseError(context + ": bad integer literal '" + token + "'");
    return v;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed on " + path);
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << content;
    out.flush();
    if (!out) throw IoError("write failed on " + path);
}

}  // namespace zsl
