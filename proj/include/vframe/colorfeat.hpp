#pragma once

#include <vframe/ingest.hpp>

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vframe {

/// The ten per-frame colour features, in their canonical order.
enum class Feature : int {
    RgbRed,
    RgbGreen,
    RgbBlue,
    Hue,
    Saturation,
    Value,
    Brightness,
    BrightnessSd,
    Contrast,
    Colorfulness,
};

inline constexpr int feature_count = 10;

/// snake_case name used in CSV columns ("rgb_red", ..., "colorfulness").
std::string_view feature_name(Feature f) noexcept;

/// Feature from its index in canonical order.
constexpr Feature feature_at(int i) noexcept { return static_cast<Feature>(i); }

using FeatureArray = Eigen::Array<double, feature_count, 1>;

/// Per-frame colour statistics. Channel, saturation, value, brightness and
/// contrast are on the 0-255 scale; hue is in degrees.
struct FrameFeatures {
    FeatureArray values = FeatureArray::Zero();

    double& operator[](Feature f) { return values(static_cast<int>(f)); }
    double operator[](Feature f) const { return values(static_cast<int>(f)); }
};

/// Per-pixel luminance estimate.
enum class BrightnessModel {
    /// sqrt(0.241 R^2 + 0.691 G^2 + 0.068 B^2)
    Perceived,
    /// 0.299 R + 0.587 G + 0.114 B
    Rec601,
};

struct FeatureOptions {
    /// Fraction of pixels trimmed from each tail when measuring contrast.
    double contrast_trim = 0.01;
    BrightnessModel brightness = BrightnessModel::Perceived;
    /// Report hue on [0, 180) instead of [0, 360).
    bool hue_half_scale = false;
};

struct Hsv {
    double h; ///< degrees, [0, 360)
    double s; ///< [0, 255]
    double v; ///< [0, 255]
};

struct Rgb {
    std::uint8_t r, g, b;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Hexcone RGB -> HSV. Hue is 0 for achromatic input.
Hsv rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept;

/// Inverse of rgb_to_hsv, rounding each channel to the nearest integer.
Rgb hsv_to_rgb(const Hsv& hsv) noexcept;

/// Luminance of a single pixel under the given model.
double pixel_brightness(std::uint8_t r, std::uint8_t g, std::uint8_t b,
                        BrightnessModel model = BrightnessModel::Perceived) noexcept;

struct BrightnessStats {
    double mean;
    double sd; ///< population standard deviation
};

BrightnessStats perceived_brightness(const Frame& frame,
                                     BrightnessModel model = BrightnessModel::Perceived);

/// Symmetrically trimmed brightness range: with n pixels and k = floor(trim * n),
/// the difference between the (n-1-k)-th and k-th smallest pixel brightness.
double contrast(const Frame& frame, double trim = 0.01,
                BrightnessModel model = BrightnessModel::Perceived);

/// Hasler-Suesstrunk colourfulness over the opponent components
/// rg = R - G and yb = (R + G) / 2 - B.
double colorfulness(const Frame& frame);

/// All ten features in one pass over the pixels. Pixel sums are accumulated in
/// fixed point, so the result is independent of pixel order.
FrameFeatures frame_features(const Frame& frame, const FeatureOptions& options = {});

/// Per-video aggregates of the per-frame features over one segment.
struct VideoFeatures {
    FeatureArray median = FeatureArray::Zero();
    FeatureArray variance = FeatureArray::Zero(); ///< sample variance (n - 1)
    FeatureArray mean = FeatureArray::Zero();
    /// Absent when fewer than three frames are available.
    std::optional<double> color_lag;
    Segment segment = Segment::all_frames();
    std::size_t n_frames = 0;
};

VideoFeatures aggregate_video(std::span<const FrameFeatures> frames,
                              const Segment& segment = Segment::all_frames());

/// Lag-1 Pearson autocorrelation of the brightness-mean series; 0 for a
/// constant series. Requires at least three frames.
double color_lag(std::span<const FrameFeatures> frames);

using VisualVector = Eigen::Matrix<double, 2 * feature_count, 1>;

/// Model input: the ten medians followed by the ten variances, canonical order.
VisualVector feature_vector(const VideoFeatures& vf);

/// Names for feature_vector() entries ("median_rgb_red", ..., "var_colorfulness").
std::vector<std::string> feature_vector_names();

/// The 31 aggregate columns of the per-video CSV: var_*, median_*, *_mean, color_lag.
std::vector<std::string> aggregate_column_names();

/// Values for aggregate_column_names(); color_lag is NaN when absent.
std::vector<double> aggregate_column_values(const VideoFeatures& vf);

} // namespace vframe
