#pragma once

// Reference computations used as test oracles. They follow the textbook
// definitions directly, in plain double arithmetic, and share no code with the
// library implementations they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

namespace oracle {

struct PixelRgb {
    double r, g, b;
};

inline std::vector<PixelRgb> pixels_of(const std::vector<std::uint8_t>& buf)
{
    std::vector<PixelRgb> out;
    for (std::size_t i = 0; i + 2 < buf.size(); i += 3) {
        out.push_back({double(buf[i]), double(buf[i + 1]), double(buf[i + 2])});
    }
    return out;
}

inline double mean(const std::vector<double>& x)
{
    double s = 0.0;
    for (double v : x) {
        s += v;
    }
    return s / double(x.size());
}

inline double population_sd(const std::vector<double>& x)
{
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) {
        s += (v - m) * (v - m);
    }
    return std::sqrt(s / double(x.size()));
}

inline double sample_variance(const std::vector<double>& x)
{
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) {
        s += (v - m) * (v - m);
    }
    return x.size() > 1 ? s / double(x.size() - 1) : 0.0;
}

inline double median(std::vector<double> x)
{
    std::sort(x.begin(), x.end());
    const std::size_t n = x.size();
    return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

inline double perceived(const PixelRgb& p)
{
    return std::sqrt(0.241 * p.r * p.r + 0.691 * p.g * p.g + 0.068 * p.b * p.b);
}

inline double colorfulness(const std::vector<PixelRgb>& px)
{
    std::vector<double> rg, yb;
    for (const auto& p : px) {
        rg.push_back(p.r - p.g);
        yb.push_back(0.5 * (p.r + p.g) - p.b);
    }
    const double s = std::sqrt(std::pow(population_sd(rg), 2) + std::pow(population_sd(yb), 2));
    const double m = std::sqrt(mean(rg) * mean(rg) + mean(yb) * mean(yb));
    return s + 0.3 * m;
}

/// Sorted per-pixel brightness, trimmed by k = floor(trim * n) from each end.
inline double contrast(const std::vector<PixelRgb>& px, double trim)
{
    std::vector<double> y;
    for (const auto& p : px) {
        y.push_back(perceived(p));
    }
    std::sort(y.begin(), y.end());
    const auto n = y.size();
    const auto k = static_cast<std::size_t>(std::floor(trim * double(n) + 1e-9));
    return y[n - 1 - k] - y[k];
}

struct Hsv {
    double h, s, v;
};

inline Hsv hsv(const PixelRgb& p)
{
    const double mx = std::max({p.r, p.g, p.b});
    const double mn = std::min({p.r, p.g, p.b});
    const double c = mx - mn;
    double h = 0.0;
    if (c > 0) {
        if (mx == p.r) {
            h = 60.0 * std::fmod((p.g - p.b) / c + 6.0, 6.0);
        } else if (mx == p.g) {
            h = 60.0 * ((p.b - p.r) / c + 2.0);
        } else {
            h = 60.0 * ((p.r - p.g) / c + 4.0);
        }
    }
    return {h, mx > 0 ? 255.0 * c / mx : 0.0, mx};
}

inline double circular_mean_deg(const std::vector<double>& deg)
{
    constexpr double pi = 3.14159265358979323846;
    double s = 0.0, c = 0.0;
    for (double d : deg) {
        s += std::sin(d * pi / 180.0);
        c += std::cos(d * pi / 180.0);
    }
    if (std::abs(s) < 1e-9 * double(deg.size()) && std::abs(c) < 1e-9 * double(deg.size())) {
        return 0.0;
    }
    double m = std::atan2(s, c) * 180.0 / pi;
    return m < 0 ? m + 360.0 : m;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b)
{
    const double ma = mean(a), mb = mean(b);
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

/// Adaptive Simpson quadrature.
inline double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-13)
{
    std::function<double(double, double, double, double, double, double, int)> step =
        [&](double lo, double hi, double flo, double fmid, double fhi, double whole, int depth) {
            const double mid = 0.5 * (lo + hi);
            const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
            const double flm = f(lm), frm = f(rm);
            const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
            const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
            if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
                return left + right + (left + right - whole) / 15.0;
            }
            return step(lo, mid, flo, flm, fmid, left, depth - 1) + step(mid, hi, fmid, frm, fhi, right, depth - 1);
        };
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    return step(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), 60);
}

/// Two-sided Student-t tail probability by direct integration of the density.
inline double t_two_sided_by_quadrature(double t, double df)
{
    const double logc = std::lgamma((df + 1) / 2) - std::lgamma(df / 2) - 0.5 * std::log(df * 3.14159265358979323846);
    auto density = [&](double x) { return std::exp(logc - (df + 1) / 2 * std::log1p(x * x / df)); };
    const double at = std::abs(t);
    // Split [0, |t|] so each piece is smooth on its own scale.
    double inner = 0.0;
    double lo = 0.0;
    for (double hi : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 1e300}) {
        const double end = std::min(hi, at);
        if (end > lo) {
            inner += integrate(density, lo, end, 1e-15);
            lo = end;
        }
        if (lo >= at) {
            break;
        }
    }
    return std::clamp(1.0 - 2.0 * inner, 0.0, 1.0);
}

/// Step-up BH by exhaustive search: the rejection set is the largest subset S
/// whose every p-value is at most |S| q / m. Every subset of the m <= 20 inputs
/// is examined; the union of the qualifying subsets of maximal size is returned.
inline std::vector<bool> bh_brute_force(const std::vector<double>& p, double q)
{
    const std::size_t m = p.size();
    std::size_t best_size = 0;
    std::uint32_t best_union = 0;
    for (std::uint32_t mask = 1; mask < (1U << m); ++mask) {
        const auto size = static_cast<std::size_t>(__builtin_popcount(mask));
        bool ok = true;
        for (std::size_t i = 0; i < m && ok; ++i) {
            if ((mask >> i) & 1U) {
                ok = p[i] <= double(size) * q / double(m);
            }
        }
        if (!ok) {
            continue;
        }
        if (size > best_size) {
            best_size = size;
            best_union = mask;
        } else if (size == best_size) {
            best_union |= mask;
        }
    }
    std::vector<bool> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        out[i] = (best_union >> i) & 1U;
    }
    return out;
}

} // namespace oracle
