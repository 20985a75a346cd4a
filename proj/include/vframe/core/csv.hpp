#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vframe::csv {

/// Quotes a field when it contains a comma, quote or line break.
std::string escape(std::string_view field);

/// Joins fields into one CSV line (no trailing newline).
std::string join(const std::vector<std::string>& fields);

/// Splits one CSV line, honouring double-quoted fields.
std::vector<std::string> split(std::string_view line);

/// Fixed-precision decimal ("%.{digits}f").
std::string fixed(double value, int digits);

/// Significant-digit formatting ("%.{digits}g"); NaN becomes an empty cell.
std::string general(double value, int digits = 6);

/// Parses a cell; empty cells yield std::nullopt.
std::optional<double> parse_number(std::string_view cell);

/// In-memory table with a header row.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name, or std::nullopt.
    std::optional<std::size_t> column(std::string_view name) const;
};

Table read(const std::filesystem::path& path);

/// Writes header + rows with LF line endings.
void write(const std::filesystem::path& path, const Table& table);

} // namespace vframe::csv
