#include "retenta/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "retenta/error.hpp"

namespace retenta::csv {

std::optional<std::size_t> Document::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    return std::nullopt;
}

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_line(std::string_view line, std::size_t line_no,
                                    std::string_view source) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    bool was_quoted = false;
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
            was_quoted = true;
        } else if (c == ',') {
            fields.push_back(was_quoted ? current : trim(current));
            current.clear();
            was_quoted = false;
        } else {
            current.push_back(c);
        }
    }
    if (quoted) {
        throw Error(ErrorCode::ParseError, std::string(source) + " line " +
                                               std::to_string(line_no) + ": unterminated quote");
    }
    fields.push_back(was_quoted ? current : trim(current));
    return fields;
}

}  // namespace

Document parse(std::string_view text, std::string_view source_name) {
    Document doc;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool have_header = false;
    // Skip a UTF-8 byte order mark.
    if (text.substr(0, 3) == "\xEF\xBB\xBF") pos = 3;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        ++line_no;
        pos = end + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (trim(line).empty()) {
            if (end == text.size()) break;
            continue;
        }
        auto fields = split_line(line, line_no, source_name);
        if (!have_header) {
            doc.header = std::move(fields);
            have_header = true;
        } else {
            if (fields.size() != doc.header.size()) {
                throw Error(ErrorCode::ParseError,
                            std::string(source_name) + " line " + std::to_string(line_no) +
                                ": expected " + std::to_string(doc.header.size()) +
                                " fields, found " + std::to_string(fields.size()));
            }
            doc.rows.push_back(Row{line_no, std::move(fields)});
        }
        if (end == text.size()) break;
    }
    if (!have_header) {
        throw Error(ErrorCode::ParseError, std::string(source_name) + ": missing header row");
    }
    return doc;
}

Document read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str(), path.string());
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::optional<double> parse_double(std::string_view text) {
    if (text.empty()) return std::nullopt;
    if (text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return value;
}

std::string format_double(double value) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), ptr);
}

std::string format_fixed6(double value) {
    std::array<char, 64> buf{};
    // Avoid printing "-0.000000".
    if (std::fabs(value) < 5e-7) value = 0.0;
    std::snprintf(buf.data(), buf.size(), "%.6f", value);
    return std::string(buf.data());
}

}  // namespace retenta::csv
