#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace retenta::csv {

struct Row {
    std::size_t line = 0;  // 1-based line number in the source file
    std::vector<std::string> fields;
};

struct Document {
    std::vector<std::string> header;
    std::vector<Row> rows;

    // Index of a header column, if present.
    std::optional<std::size_t> column(std::string_view name) const;
};

// Reads a comma-separated UTF-8 file with a mandatory header row. Fields may
// be double-quoted; blank lines are skipped. Throws Error(Io) or
// Error(ParseError).
Document read(const std::filesystem::path& path);

Document parse(std::string_view text, std::string_view source_name = "<memory>");

// Quotes a field only when it contains a comma, quote, or newline.
std::string escape(std::string_view field);

std::optional<double> parse_double(std::string_view text);

// Shortest representation that parses back to the same double.
std::string format_double(double value);

// Fixed-point with six decimals, used for report files.
std::string format_fixed6(double value);

}  // namespace retenta::csv
