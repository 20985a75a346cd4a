#include <vframe/pipeline.hpp>

#include <vframe/core/csv.hpp>
#include <vframe/core/error.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace vframe::pipeline {

std::optional<std::size_t> FeatureTable::column(std::string_view name) const
{
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - columns.begin());
}

std::vector<std::size_t> FeatureTable::rows_for(const Segment& segment) const
{
    const std::string name = segment.name();
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (segments[i] == name) {
            rows.push_back(i);
        }
    }
    return rows;
}

FeatureTable read_feature_table(const fs::path& path)
{
    if (!fs::exists(path)) {
        throw ConfigError("feature table " + path.string() + " not found; run `features` first");
    }
    const csv::Table raw = csv::read(path);
    if (raw.header.size() < 3 || raw.header[0] != "id" || raw.header[1] != "segment" || raw.header[2] != "n_frames") {
        throw ParseError(path.string() + ": expected columns id,segment,n_frames,...");
    }
    FeatureTable table;
    table.columns.assign(raw.header.begin() + 3, raw.header.end());
    table.values.resize(static_cast<Eigen::Index>(raw.rows.size()), static_cast<Eigen::Index>(table.columns.size()));
    for (std::size_t r = 0; r < raw.rows.size(); ++r) {
        const auto& row = raw.rows[r];
        if (row.size() != raw.header.size()) {
            throw ParseError(path.string() + ": row " + std::to_string(r + 2) + " has " + std::to_string(row.size())
                             + " cells, expected " + std::to_string(raw.header.size()));
        }
        table.ids.push_back(row[0]);
        table.segments.push_back(row[1]);
        table.n_frames.push_back(row[2].empty() ? 0 : static_cast<std::size_t>(std::stoull(row[2])));
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            const auto v = csv::parse_number(row[c + 3]);
            table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))
                = v.value_or(std::numeric_limits<double>::quiet_NaN());
        }
    }
    return table;
}

void write_feature_table(const fs::path& path, const FeatureTable& table)
{
    csv::Table out;
    out.header = {"id", "segment", "n_frames"};
    out.header.insert(out.header.end(), table.columns.begin(), table.columns.end());
    for (std::size_t r = 0; r < table.ids.size(); ++r) {
        std::vector<std::string> row{table.ids[r], table.segments[r],
                                     table.n_frames[r] ? std::to_string(table.n_frames[r]) : std::string()};
        for (Eigen::Index c = 0; c < table.values.cols(); ++c) {
            row.push_back(csv::general(table.values(static_cast<Eigen::Index>(r), c)));
        }
        out.rows.push_back(std::move(row));
    }
    csv::write(path, out);
}

std::vector<std::string> feature_set_names()
{
    return {"visual", "emotions", "wordcount", "embedding"};
}

std::vector<std::string> parse_feature_sets(std::string_view expression)
{
    const auto known = feature_set_names();
    std::vector<std::string> sets;
    std::size_t start = 0;
    while (start <= expression.size()) {
        const std::size_t plus = std::min(expression.find('+', start), expression.size());
        const std::string name(expression.substr(start, plus - start));
        if (std::find(known.begin(), known.end(), name) == known.end()) {
            std::string list;
            for (const auto& k : known) {
                list += (list.empty() ? "" : ", ") + k;
            }
            throw ConfigError("unknown feature set '" + name + "' (valid: " + list + ", joined with '+')");
        }
        if (std::find(sets.begin(), sets.end(), name) == sets.end()) {
            sets.push_back(name);
        }
        start = plus + 1;
    }
    return sets;
}

double freedman_diaconis_width(std::vector<double> values)
{
    const std::size_t n = values.size();
    if (n < 2) {
        return 0.0;
    }
    std::sort(values.begin(), values.end());
    const double range = values.back() - values.front();
    if (range <= 0.0) {
        return 0.0;
    }
    // Linear interpolation between order statistics.
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(n - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, n - 1);
        return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
    };
    const double iqr = quantile(0.75) - quantile(0.25);
    if (iqr > 0.0) {
        return 2.0 * iqr / std::cbrt(static_cast<double>(n));
    }
    return range / std::ceil(std::log2(static_cast<double>(n)) + 1.0);
}

} // namespace vframe::pipeline
