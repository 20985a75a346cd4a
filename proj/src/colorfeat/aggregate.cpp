#include <vframe/colorfeat.hpp>

#include <vframe/core/error.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace vframe {

namespace {

double median_of(std::vector<double> v)
{
    const std::size_t n = v.size();
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (n % 2 == 1) {
        return *mid;
    }
    const double upper = *mid;
    const double lower = *std::max_element(v.begin(), mid);
    return lower + (upper - lower) / 2.0;
}

/// Mean and sample variance, computed on deviations from the first element so a
/// constant series yields exactly that constant and exactly zero variance.
std::pair<double, double> mean_and_variance(const std::vector<double>& v)
{
    const double anchor = v.front();
    double shift_sum = 0.0;
    for (double x : v) {
        shift_sum += x - anchor;
    }
    const double shift_mean = shift_sum / static_cast<double>(v.size());
    if (v.size() < 2) {
        return {anchor + shift_mean, 0.0};
    }
    double ss = 0.0;
    for (double x : v) {
        const double d = (x - anchor) - shift_mean;
        ss += d * d;
    }
    return {anchor + shift_mean, ss / static_cast<double>(v.size() - 1)};
}

} // namespace

double color_lag(std::span<const FrameFeatures> frames)
{
    if (frames.size() < 3) {
        throw DataError("color_lag needs at least three frames");
    }
    const std::size_t m = frames.size() - 1;
    const double anchor = frames[0][Feature::Brightness];
    auto at = [&](std::size_t i) { return frames[i][Feature::Brightness] - anchor; };

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        mx += at(i);
        my += at(i + 1);
    }
    mx /= static_cast<double>(m);
    my /= static_cast<double>(m);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double dx = at(i) - mx;
        const double dy = at(i + 1) - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        return 0.0;
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

VideoFeatures aggregate_video(std::span<const FrameFeatures> frames, const Segment& segment)
{
    if (frames.empty()) {
        throw DataError("cannot aggregate an empty frame sequence");
    }
    VideoFeatures vf;
    vf.segment = segment;
    vf.n_frames = frames.size();
    std::vector<double> column(frames.size());
    for (int k = 0; k < feature_count; ++k) {
        for (std::size_t i = 0; i < frames.size(); ++i) {
            column[i] = frames[i].values(k);
        }
        const auto [mean, var] = mean_and_variance(column);
        vf.mean(k) = mean;
        vf.variance(k) = var;
        vf.median(k) = median_of(column);
    }
    if (frames.size() >= 3) {
        vf.color_lag = color_lag(frames);
    }
    return vf;
}

VisualVector feature_vector(const VideoFeatures& vf)
{
    VisualVector v;
    v << vf.median.matrix(), vf.variance.matrix();
    return v;
}

std::vector<std::string> feature_vector_names()
{
    std::vector<std::string> names;
    for (const char* prefix : {"median_", "var_"}) {
        for (int k = 0; k < feature_count; ++k) {
            names.push_back(prefix + std::string(feature_name(feature_at(k))));
        }
    }
    return names;
}

namespace {

// Row order of the per-video report; the medians and means list brightness
// before contrast and colourfulness, the variances after.
constexpr std::array<Feature, feature_count> variance_order{
    Feature::RgbRed,   Feature::RgbGreen,     Feature::RgbBlue,    Feature::Hue,
    Feature::Saturation, Feature::Value,      Feature::Contrast,   Feature::Colorfulness,
    Feature::Brightness, Feature::BrightnessSd};
constexpr std::array<Feature, feature_count> location_order{
    Feature::RgbRed,     Feature::RgbGreen,   Feature::RgbBlue,  Feature::Hue,
    Feature::Saturation, Feature::Value,      Feature::Brightness, Feature::BrightnessSd,
    Feature::Contrast,   Feature::Colorfulness};

} // namespace

std::vector<std::string> aggregate_column_names()
{
    std::vector<std::string> names;
    for (Feature f : variance_order) {
        names.push_back("var_" + std::string(feature_name(f)));
    }
    for (Feature f : location_order) {
        names.push_back("median_" + std::string(feature_name(f)));
    }
    for (Feature f : location_order) {
        names.push_back(std::string(feature_name(f)) + "_mean");
    }
    names.emplace_back("color_lag");
    return names;
}

std::vector<double> aggregate_column_values(const VideoFeatures& vf)
{
    std::vector<double> out;
    out.reserve(3 * feature_count + 1);
    for (Feature f : variance_order) {
        out.push_back(vf.variance(static_cast<int>(f)));
    }
    for (Feature f : location_order) {
        out.push_back(vf.median(static_cast<int>(f)));
    }
    for (Feature f : location_order) {
        out.push_back(vf.mean(static_cast<int>(f)));
    }
    out.push_back(vf.color_lag.value_or(std::numeric_limits<double>::quiet_NaN()));
    return out;
}

} // namespace vframe
