#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "equisparse/error.hpp"
#include "equisparse/penalty.hpp"

namespace equisparse {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::FileUnreadable, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::FileUnreadable, "cannot write '" + path + "'");
    out << content;
}

struct CsvRecord {
    std::vector<std::string> fields;
    int line = 0;
};

/// RFC-4180 records: quoted fields, doubled quotes, CRLF or LF. Blank lines are skipped.
inline std::vector<CsvRecord> parse_csv(std::string_view text, const std::string& source) {
    std::vector<CsvRecord> out;
    CsvRecord rec;
    std::string field;
    bool quoted = false, field_started = false;
    int line = 1;
    rec.line = 1;

    auto end_field = [&] {
        rec.fields.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        if (!(rec.fields.size() == 1 && rec.fields[0].empty())) out.push_back(std::move(rec));
        rec = CsvRecord{};
        rec.line = line;
    };

    for (size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        if (c == '"' && !field_started) {
            quoted = field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
            continue;
        } else if (c == '\n') {
            end_field();
            ++line;
            end_record();
        } else {
            field += c;
            field_started = true;
        }
    }
    require(!quoted, ErrorCode::MalformedLine, source + ":" + std::to_string(line) + ": unterminated quoted field");
    if (field_started || !rec.fields.empty()) {
        end_field();
        end_record();
    }
    return out;
}

/// Parses one numeric field; rejects non-numbers and non-finite values with their position.
inline double parse_number(std::string_view s, const std::string& source, int line, int col) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    const std::string where = source + ":" + std::to_string(line) + ":" + std::to_string(col);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    require(!s.empty() && ec == std::errc() && ptr == s.data() + s.size(), ErrorCode::MalformedLine,
            where + ": not a number: '" + std::string(s) + "'");
    require(std::isfinite(v), ErrorCode::NonFiniteValue, where + ": non-finite value '" + std::string(s) + "'");
    return v;
}

struct MatrixCsv {
    Matrix values;
    std::vector<std::string> header;  // empty without a header row
};

inline MatrixCsv parse_matrix_csv(std::string_view text, const std::string& source, bool header) {
    auto recs = parse_csv(text, source);
    MatrixCsv out;
    if (header) {
        require(!recs.empty(), ErrorCode::EmptyInput, source + ": missing header row");
        out.header = recs.front().fields;
        recs.erase(recs.begin());
    }
    require(!recs.empty(), ErrorCode::EmptyInput, source + ": no data rows");
    const size_t width = header ? out.header.size() : recs.front().fields.size();
    out.values.resize(static_cast<Eigen::Index>(recs.size()), static_cast<Eigen::Index>(width));
    for (size_t i = 0; i < recs.size(); ++i) {
        const auto& r = recs[i];
        require(r.fields.size() == width, ErrorCode::DimensionMismatch,
                source + ":" + std::to_string(r.line) + ": expected " + std::to_string(width) + " fields, found " +
                    std::to_string(r.fields.size()));
        for (size_t j = 0; j < width; ++j)
            out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                parse_number(r.fields[j], source, r.line, static_cast<int>(j + 1));
    }
    return out;
}

/// Single-column CSV without header.
inline Vector parse_vector_csv(std::string_view text, const std::string& source) {
    auto m = parse_matrix_csv(text, source, false);
    require(m.values.cols() == 1, ErrorCode::DimensionMismatch,
            source + ": expected a single column, found " + std::to_string(m.values.cols()));
    return m.values.col(0);
}

/// Shortest decimal text that reads back to the same double.
inline std::string format_number(double v) {
    if (v == 0.0) return "0";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string format_vector_csv(const Vector& v) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) out += format_number(v(i)) + "\n";
    return out;
}

inline std::string format_matrix_csv(const Matrix& m, const std::vector<std::string>& header = {}) {
    std::string out;
    auto join = [&](auto&& get, Eigen::Index width) {
        for (Eigen::Index j = 0; j < width; ++j) {
            if (j) out += ',';
            out += get(j);
        }
        out += '\n';
    };
    if (!header.empty()) join([&](Eigen::Index j) { return csv_escape(header[j]); }, m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) join([&](Eigen::Index j) { return format_number(m(i, j)); }, m.cols());
    return out;
}

}  // namespace equisparse
