#include <vframe/core/csv.hpp>

#include <vframe/core/error.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace vframe::csv {

std::string escape(std::string_view field)
{
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) {
        return std::string(field);
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

std::string join(const std::vector<std::string>& fields)
{
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) {
            line += ',';
        }
        line += escape(fields[i]);
    }
    return line;
}

std::vector<std::string> split(std::string_view line)
{
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else if (c != '\r') {
            current += c;
        }
    }
    fields.push_back(std::move(current));
    return fields;
}

std::string fixed(double value, int digits)
{
    if (std::isnan(value)) {
        return {};
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, value);
    std::string s = buf;
    // Avoid "-0.00" in reports.
    if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) {
        s.erase(0, 1);
    }
    return s;
}

std::string general(double value, int digits)
{
    if (std::isnan(value)) {
        return {};
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, value);
    return buf;
}

std::optional<double> parse_number(std::string_view cell)
{
    if (cell.empty()) {
        return std::nullopt;
    }
    std::string owned(cell);
    char* end = nullptr;
    const double v = std::strtod(owned.c_str(), &end);
    if (end != owned.c_str() + owned.size()) {
        throw ParseError("not a number: '" + owned + "'");
    }
    return v;
}

std::optional<std::size_t> Table::column(std::string_view name) const
{
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return i;
        }
    }
    return std::nullopt;
}

Table read(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open CSV file " + path.string());
    }
    Table table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        auto fields = split(line);
        if (table.header.empty()) {
            table.header = std::move(fields);
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected "
                             + std::to_string(table.header.size()) + " fields, found "
                             + std::to_string(fields.size()));
        }
        table.rows.push_back(std::move(fields));
    }
    return table;
}

void write(const std::filesystem::path& path, const Table& table)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write CSV file " + path.string());
    }
    out << join(table.header) << '\n';
    for (const auto& row : table.rows) {
        out << join(row) << '\n';
    }
}

} // namespace vframe::csv
