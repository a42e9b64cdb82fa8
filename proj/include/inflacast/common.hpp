#pragma once

#include <charconv>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace inflacast {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A value that is mathematically undefined for its input (e.g. a share of zero members).
class NotComputable : public Error {
public:
    using Error::Error;
};

/// Malformed input data. Carries the 1-based line number when known (0 otherwise).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Bad configuration or caller misuse; maps to CLI exit code 2.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Calendar month. Ordered chronologically.
struct Month {
    int year = 1970;
    int month = 1;  // 1..12

    static Month parse(std::string_view text);
    static Month from_index(int absolute);

    /// Months since year 0, January. Consecutive months differ by one.
    int index() const noexcept { return year * 12 + (month - 1); }
    Month plus(int months) const { return from_index(index() + months); }
    std::string str() const;

    friend bool operator==(const Month&, const Month&) = default;
    friend auto operator<=>(const Month& a, const Month& b) { return a.index() <=> b.index(); }
};

struct MonthRange {
    Month first{2010, 1};
    Month last{2022, 5};

    bool contains(const Month& m) const noexcept { return first <= m && m <= last; }
};

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

/// Fixed-point decimal with the given number of digits after the point.
std::string format_fixed(double value, int digits);

double parse_double(std::string_view text);
long long parse_int(std::string_view text);

/// Trim ASCII whitespace on both ends.
std::string_view trim(std::string_view text);

namespace csv {

/// Split one CSV line honouring double-quoted fields ("" escapes a quote).
std::vector<std::string> split_line(std::string_view line);

/// Quote a field only when it contains a comma, quote, or newline.
std::string escape(std::string_view field);

std::string join(const std::vector<std::string>& fields);

}  // namespace csv

/// Write `content` to `path` via a temporary sibling and rename, so readers never see partial files.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

}  // namespace inflacast
