#include <vframe/stats.hpp>

#include <vframe/core/error.hpp>

#include <algorithm>
#include <limits>

namespace vframe::stats {

std::vector<ComparisonResult> compare_groups(const Eigen::MatrixXd& values, std::span<const std::string> columns,
                                             std::span<const int> group, double q)
{
    if (static_cast<std::size_t>(values.cols()) != columns.size()) {
        throw DataError("column names do not match the feature table width");
    }
    if (static_cast<std::size_t>(values.rows()) != group.size()) {
        throw DataError("group assignment does not match the feature table height");
    }

    std::vector<ComparisonResult> results;
    results.reserve(columns.size());
    std::vector<double> a, b;
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
        a.clear();
        b.clear();
        for (Eigen::Index r = 0; r < values.rows(); ++r) {
            const double v = values(r, c);
            if (std::isnan(v)) {
                continue;
            }
            if (group[static_cast<std::size_t>(r)] == 0) {
                a.push_back(v);
            } else if (group[static_cast<std::size_t>(r)] == 1) {
                b.push_back(v);
            }
        }
        const auto& name = columns[static_cast<std::size_t>(c)];
        if (a.size() < 2 || b.size() < 2) {
            throw DataError("variable '" + name + "': each group needs at least 2 videos (have "
                            + std::to_string(a.size()) + " and " + std::to_string(b.size()) + ")");
        }
        const TestResult t = welch_t_test(std::span<const double>(a), std::span<const double>(b));
        ComparisonResult row;
        row.variable = name;
        row.group_a_value = t.mean_a;
        row.group_b_value = t.mean_b;
        row.n_a = t.n_a;
        row.n_b = t.n_b;
        row.t = t.t;
        row.df = t.df;
        row.p_uncorrected = t.p;
        try {
            row.cohens_d = cohens_d(std::span<const double>(a), std::span<const double>(b));
        } catch (const DataError&) {
            row.cohens_d = t.mean_a == t.mean_b ? 0.0 : std::numeric_limits<double>::quiet_NaN();
        }
        results.push_back(std::move(row));
    }

    std::vector<double> p;
    p.reserve(results.size());
    for (const auto& r : results) {
        p.push_back(r.p_uncorrected);
    }
    if (!p.empty()) {
        const BhResult bh = benjamini_hochberg(p, q);
        for (std::size_t i = 0; i < results.size(); ++i) {
            results[i].bh_threshold = bh.thresholds[i];
            results[i].significant = bh.rejected[i];
        }
    }
    return results;
}

void sort_by_p(std::vector<ComparisonResult>& results)
{
    std::stable_sort(results.begin(), results.end(),
                     [](const auto& x, const auto& y) { return x.p_uncorrected < y.p_uncorrected; });
}

} // namespace vframe::stats
