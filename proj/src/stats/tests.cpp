#include <vframe/stats.hpp>

#include <vframe/core/error.hpp>
#include <vframe/core/log.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace vframe::stats {

namespace {

/// Continued fraction for I_x(a, b) (modified Lentz), valid for x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double a, double b, double x)
{
    constexpr int max_iter = 100000;
    constexpr double eps = 1e-16;
    constexpr double tiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) {
        d = tiny;
    }
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) {
            c = tiny;
        }
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) {
            c = tiny;
        }
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) {
            return h;
        }
    }
    log().warn("incomplete beta continued fraction did not converge (a={}, b={}, x={})", a, b, x);
    return h;
}

} // namespace

double incomplete_beta(double a, double b, double x)
{
    if (!(a > 0.0) || !(b > 0.0)) {
        throw DataError("incomplete beta requires a, b > 0");
    }
    if (x <= 0.0) {
        return 0.0;
    }
    if (x >= 1.0) {
        return 1.0;
    }
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided(double t, double df)
{
    if (!(df > 0.0)) {
        throw DataError("t distribution requires df > 0");
    }
    if (std::isinf(t)) {
        return 0.0;
    }
    const double t2 = t * t;
    // For small |t|, 1 - x = t^2 / (df + t^2) loses nothing; pass x directly.
    const double x = df / (df + t2);
    return std::clamp(incomplete_beta(0.5 * df, 0.5, x), 0.0, 1.0);
}

Moments moments(std::span<const double> x)
{
    if (x.empty()) {
        throw DataError("moments of an empty sample");
    }
    const double anchor = x.front();
    double s = 0.0;
    for (double v : x) {
        s += v - anchor;
    }
    const double shift_mean = s / static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) {
        const double d = (v - anchor) - shift_mean;
        ss += d * d;
    }
    const double var = x.size() > 1 ? ss / static_cast<double>(x.size() - 1) : 0.0;
    return {anchor + shift_mean, var};
}

TestResult welch_t_test(std::span<const double> a, std::span<const double> b)
{
    if (a.size() < 2 || b.size() < 2) {
        throw DataError("Welch t-test needs at least two observations per group");
    }
    const Moments ma = moments(a);
    const Moments mb = moments(b);
    TestResult r;
    r.mean_a = ma.mean;
    r.mean_b = mb.mean;
    r.n_a = a.size();
    r.n_b = b.size();

    const double va = ma.variance / static_cast<double>(a.size());
    const double vb = mb.variance / static_cast<double>(b.size());
    const double se2 = va + vb;
    const double diff = ma.mean - mb.mean;
    if (se2 == 0.0) {
        r.degenerate = true;
        r.df = static_cast<double>(a.size() + b.size() - 2);
        if (diff == 0.0) {
            r.t = 0.0;
            r.p = 1.0;
        } else {
            log().warn("Welch t-test: both samples are constant with different means; reporting p = 0");
            r.t = diff > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
            r.p = 0.0;
        }
        return r;
    }
    r.t = diff / std::sqrt(se2);
    r.df = se2 * se2
           / (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
    r.p = student_t_two_sided(r.t, r.df);
    return r;
}

double cohens_d(std::span<const double> a, std::span<const double> b)
{
    if (a.empty() || b.empty() || a.size() + b.size() < 3) {
        throw DataError("Cohen's d needs both groups nonempty and at least three observations");
    }
    const Moments ma = moments(a);
    const Moments mb = moments(b);
    const double pooled =
        std::sqrt(((static_cast<double>(a.size()) - 1.0) * ma.variance + (static_cast<double>(b.size()) - 1.0) * mb.variance)
                  / static_cast<double>(a.size() + b.size() - 2));
    if (pooled == 0.0) {
        throw DataError("Cohen's d is undefined: pooled standard deviation is zero");
    }
    return (ma.mean - mb.mean) / pooled;
}

BhResult benjamini_hochberg(std::span<const double> pvalues, double q)
{
    if (!(q > 0.0 && q < 1.0)) {
        throw ConfigError("BH level q must lie in (0, 1)");
    }
    const std::size_t m = pvalues.size();
    for (double p : pvalues) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw DataError("p-values must lie in [0, 1]");
        }
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return pvalues[i] < pvalues[j]; });

    BhResult out{std::vector<double>(m), std::vector<bool>(m, false)};
    std::size_t k = 0;
    for (std::size_t pos = 0; pos < m;) {
        // Tie group [pos, end) shares the largest rank `end`.
        std::size_t end = pos + 1;
        while (end < m && pvalues[order[end]] == pvalues[order[pos]]) {
            ++end;
        }
        const double threshold = static_cast<double>(end) * q / static_cast<double>(m);
        for (std::size_t i = pos; i < end; ++i) {
            out.thresholds[order[i]] = threshold;
        }
        if (pvalues[order[pos]] <= threshold) {
            k = end;
        }
        pos = end;
    }
    for (std::size_t i = 0; i < k; ++i) {
        out.rejected[order[i]] = true;
    }
    return out;
}

} // namespace vframe::stats
