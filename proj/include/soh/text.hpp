#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

#include "soh/errors.hpp"

namespace soh::text {

// Shortest round-trippable decimal form. All machine-read files (telemetry,
// model, state snapshots) are written through this so that parsing them back
// recovers the exact doubles.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string fmt_fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

// Strict double parse: the whole token must be consumed and the value finite.
inline bool parse_double(std::string_view tok, double& out) {
    if (tok.empty()) return false;
    std::string tmp(tok);
    char* end = nullptr;
    double v = std::strtod(tmp.c_str(), &end);
    if (end != tmp.c_str() + tmp.size()) return false;
    if (!std::isfinite(v)) return false;
    out = v;
    return true;
}

inline bool parse_long(std::string_view tok, long& out) {
    if (tok.empty()) return false;
    std::string tmp(tok);
    char* end = nullptr;
    long v = std::strtol(tmp.c_str(), &end, 10);
    if (end != tmp.c_str() + tmp.size()) return false;
    out = v;
    return true;
}

inline std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            break;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

}  // namespace soh::text
