#include "inflacast/common.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace inflacast {

Month Month::parse(std::string_view text) {
    text = trim(text);
    // YYYY-MM, nothing else.
    if (text.size() != 7 || text[4] != '-') {
        throw ParseError("unknown month format '" + std::string(text) + "', expected YYYY-MM");
    }
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u}) {
        if (text[i] < '0' || text[i] > '9') {
            throw ParseError("unknown month format '" + std::string(text) + "', expected YYYY-MM");
        }
    }
    Month m;
    m.year = (text[0] - '0') * 1000 + (text[1] - '0') * 100 + (text[2] - '0') * 10 + (text[3] - '0');
    m.month = (text[5] - '0') * 10 + (text[6] - '0');
    if (m.month < 1 || m.month > 12) {
        throw ParseError("month out of range in '" + std::string(text) + "'");
    }
    return m;
}

Month Month::from_index(int absolute) {
    Month m;
    m.year = absolute >= 0 ? absolute / 12 : (absolute - 11) / 12;
    m.month = absolute - m.year * 12 + 1;
    return m;
}

std::string Month::str() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
    return buf;
}

std::string format_double(double value) {
    if (value == 0.0) {
        return "0";  // folds -0 as well
    }
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{}) {
        throw Error("format_double: conversion failed");
    }
    return std::string(buf.data(), ptr);
}

std::string format_fixed(double value, int digits) {
    std::array<char, 128> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::fixed, digits);
    if (ec != std::errc{}) {
        throw Error("format_fixed: conversion failed");
    }
    std::string out(buf.data(), ptr);
    if (out.find_first_not_of("-0.") == std::string::npos && out.front() == '-') {
        out.erase(0, 1);
    }
    return out;
}

double parse_double(std::string_view text) {
    text = trim(text);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ParseError("not a number: '" + std::string(text) + "'");
    }
    return value;
}

long long parse_int(std::string_view text) {
    text = trim(text);
    long long value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ParseError("not an integer: '" + std::string(text) + "'");
    }
    return value;
}

std::string_view trim(std::string_view text) {
    constexpr std::string_view ws = " \t\r\n\f\v";
    const auto begin = text.find_first_not_of(ws);
    if (begin == std::string_view::npos) {
        return {};
    }
    const auto end = text.find_last_not_of(ws);
    return text.substr(begin, end - begin + 1);
}

namespace csv {

std::vector<std::string> split_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') {
        line.remove_suffix(1);
    }
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (quoted) {
        throw ParseError("unterminated quoted field");
    }
    fields.push_back(std::move(current));
    return fields;
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) {
        return std::string(field);
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') {
            out += "\"\"";
        } else {
            out.push_back(c);
        }
    }
    out.push_back('"');
    return out;
}

std::string join(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) {
            out.push_back(',');
        }
        out += escape(fields[i]);
    }
    return out;
}

}  // namespace csv

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot open '" + tmp.string() + "' for writing");
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            throw Error("write failed for '" + tmp.string() + "'");
        }
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace inflacast
