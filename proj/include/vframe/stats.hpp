#pragma once

#include <Eigen/Core>

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace vframe::stats {

/// Regularized incomplete beta function I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

/// Two-sided tail probability P(|T| >= |t|) for Student's t with `df` degrees of freedom.
double student_t_two_sided(double t, double df);

struct TestResult {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0; ///< two-sided
    double mean_a = 0.0;
    double mean_b = 0.0;
    std::size_t n_a = 0;
    std::size_t n_b = 0;
    /// Both samples had zero variance; t and p follow the degenerate convention.
    bool degenerate = false;
};

/// Sample mean and (n - 1) variance.
struct Moments {
    double mean;
    double variance;
};
Moments moments(std::span<const double> x);

/// Welch's unequal-variance two-sample t-test.
TestResult welch_t_test(std::span<const double> a, std::span<const double> b);

/// Standardized mean difference with pooled standard deviation; the sign follows
/// mean(a) - mean(b). Throws DataError when the pooled deviation is zero.
double cohens_d(std::span<const double> a, std::span<const double> b);

template <typename DerivedA, typename DerivedB>
TestResult welch_t_test(const Eigen::DenseBase<DerivedA>& a, const Eigen::DenseBase<DerivedB>& b)
{
    const Eigen::VectorXd ea = a.derived().template cast<double>();
    const Eigen::VectorXd eb = b.derived().template cast<double>();
    return welch_t_test(std::span<const double>(ea.data(), static_cast<std::size_t>(ea.size())),
                        std::span<const double>(eb.data(), static_cast<std::size_t>(eb.size())));
}

template <typename DerivedA, typename DerivedB>
double cohens_d(const Eigen::DenseBase<DerivedA>& a, const Eigen::DenseBase<DerivedB>& b)
{
    const Eigen::VectorXd ea = a.derived().template cast<double>();
    const Eigen::VectorXd eb = b.derived().template cast<double>();
    return cohens_d(std::span<const double>(ea.data(), static_cast<std::size_t>(ea.size())),
                    std::span<const double>(eb.data(), static_cast<std::size_t>(eb.size())));
}

struct BhResult {
    /// Rank-based threshold (rank / m) * q for each input, in input order.
    std::vector<double> thresholds;
    std::vector<bool> rejected;
};

/// Benjamini-Hochberg step-up procedure at level q. Tied p-values share the
/// largest rank among them.
BhResult benjamini_hochberg(std::span<const double> pvalues, double q = 0.05);

/// Krippendorff's alpha for nominal data. `ratings` is coders x items; NaN
/// marks a missing rating. Returns 1 (with a warning) when every pairable
/// rating has the same value.
double krippendorff_alpha_nominal(const Eigen::MatrixXd& ratings);

struct ComparisonResult {
    std::string variable;
    double group_a_value = 0.0; ///< mean of the per-video values in group a
    double group_b_value = 0.0;
    std::size_t n_a = 0;
    std::size_t n_b = 0;
    double t = 0.0;
    double df = 0.0;
    double p_uncorrected = 1.0;
    double bh_threshold = 0.0;
    bool significant = false;
    /// Signed, mean(a) - mean(b); NaN when undefined (zero pooled deviation with unequal means).
    double cohens_d = 0.0;
};

/// Welch test and Cohen's d for every column of `values` (rows are videos, NaN
/// marks a missing cell), followed by BH control across all tested columns.
/// `group[i]` is 0 for group a, 1 for group b and anything else to exclude row i.
std::vector<ComparisonResult> compare_groups(const Eigen::MatrixXd& values, std::span<const std::string> columns,
                                             std::span<const int> group, double q = 0.05);

/// Orders results by ascending uncorrected p (stable).
void sort_by_p(std::vector<ComparisonResult>& results);

} // namespace vframe::stats
