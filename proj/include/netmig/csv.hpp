#pragma once

// Small CSV layer shared by the loaders and the report writers.  Reading
// follows RFC 4180 closely enough for the file formats used here: quoted
// fields may contain commas and doubled quotes, records are single lines,
// CRLF endings are tolerated and blank lines are skipped.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <string>
#include <vector>

#include "netmig/errors.hpp"

namespace netmig::csv {

struct Row {
    std::vector<std::string> fields;
    std::size_t line = 0;
};

inline std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
    return s.substr(b, e - b);
}

class Reader {
public:
    Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    const std::string& source() const { return source_; }

    // Reads the next non-blank record.  Returns false at end of input.
    bool next(Row& row) {
        std::string raw;
        while (std::getline(in_, raw)) {
            ++line_;
            if (!raw.empty() && raw.back() == '\r') raw.pop_back();
            if (trim(raw).empty()) continue;
            row.fields = split(raw);
            row.line = line_;
            return true;
        }
        return false;
    }

private:
    std::vector<std::string> split(const std::string& raw) const {
        std::vector<std::string> out;
        std::string field;
        bool quoted = false;
        bool was_quoted = false;
        for (std::size_t i = 0; i < raw.size(); ++i) {
            const char c = raw[i];
            if (quoted) {
                if (c == '"') {
                    if (i + 1 < raw.size() && raw[i + 1] == '"') {
                        field += '"';
                        ++i;
                    } else {
                        quoted = false;
                    }
                } else {
                    field += c;
                }
            } else if (c == '"' && trim(field).empty() && !was_quoted) {
                quoted = true;
                was_quoted = true;
                field.clear();
            } else if (c == ',') {
                out.push_back(was_quoted ? field : trim(field));
                field.clear();
                was_quoted = false;
            } else {
                field += c;
            }
        }
        if (quoted)
            throw ValidationError(source_ + ":" + std::to_string(line_) + ": unterminated quote");
        out.push_back(was_quoted ? field : trim(field));
        return out;
    }

    std::istream& in_;
    std::string source_;
    std::size_t line_ = 0;
};

inline std::string where(const Reader& reader, const Row& row) {
    return reader.source() + ":" + std::to_string(row.line);
}

inline void expect_columns(const Reader& reader, const Row& row, std::size_t count) {
    if (row.fields.size() != count)
        throw ValidationError(where(reader, row) + ": expected " + std::to_string(count) +
                              " columns, got " + std::to_string(row.fields.size()));
}

inline void expect_header(const Reader& reader, const Row& row,
                          const std::vector<std::string>& names) {
    if (row.fields != names) {
        std::string want;
        for (const auto& n : names) {
            if (!want.empty()) want += ",";
            want += n;
        }
        throw ValidationError(where(reader, row) + ": expected header '" + want + "'");
    }
}

inline double parse_double(const Reader& reader, const Row& row, std::size_t col,
                           const std::string& what) {
    const std::string& text = row.fields.at(col);
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || !std::isfinite(value))
        throw ValidationError(where(reader, row) + ": " + what + " is not a finite number: '" +
                              text + "'");
    return value;
}

inline long long parse_int(const Reader& reader, const Row& row, std::size_t col,
                           const std::string& what) {
    const std::string& text = row.fields.at(col);
    long long value = 0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw ValidationError(where(reader, row) + ": " + what + " is not an integer: '" +
                              text + "'");
    return value;
}

// Quotes a field only when it needs quoting.
inline std::string quote(const std::string& field) {
    bool needs = false;
    for (char c : field)
        if (c == ',' || c == '"' || c == '\n' || c == '\r') needs = true;
    if (!field.empty() && (field.front() == ' ' || field.back() == ' ')) needs = true;
    if (!needs) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

// Report files round numbers to six significant digits.
inline std::string fmt_sig6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// Data files that must reload to the identical value use shortest
// round-trip formatting.
inline std::string fmt_exact(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    }
    return std::string(buf, ptr);
}

}  // namespace netmig::csv
