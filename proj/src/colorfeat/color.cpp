#include <vframe/colorfeat.hpp>

#include <vframe/core/error.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

namespace vframe {

std::string_view feature_name(Feature f) noexcept
{
    switch (f) {
    case Feature::RgbRed: return "rgb_red";
    case Feature::RgbGreen: return "rgb_green";
    case Feature::RgbBlue: return "rgb_blue";
    case Feature::Hue: return "hue";
    case Feature::Saturation: return "saturation";
    case Feature::Value: return "value";
    case Feature::Brightness: return "brightness";
    case Feature::BrightnessSd: return "brightness_sd";
    case Feature::Contrast: return "contrast";
    case Feature::Colorfulness: return "colorfulness";
    }
    return "";
}

Hsv rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept
{
    const int mx = std::max({r, g, b});
    const int mn = std::min({r, g, b});
    const int chroma = mx - mn;
    Hsv out{0.0, 0.0, static_cast<double>(mx)};
    if (mx > 0) {
        out.s = 255.0 * chroma / mx;
    }
    if (chroma == 0) {
        return out;
    }
    double h;
    if (mx == r) {
        h = 60.0 * (g - b) / chroma;
        if (h < 0.0) {
            h += 360.0;
        }
    } else if (mx == g) {
        h = 60.0 * (b - r) / chroma + 120.0;
    } else {
        h = 60.0 * (r - g) / chroma + 240.0;
    }
    out.h = h >= 360.0 ? h - 360.0 : h;
    return out;
}

Rgb hsv_to_rgb(const Hsv& hsv) noexcept
{
    const double c = hsv.v * hsv.s / 255.0;
    double hp = std::fmod(hsv.h, 360.0);
    if (hp < 0.0) {
        hp += 360.0;
    }
    hp /= 60.0;
    const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(hp)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
    }
    const double m = hsv.v - c;
    auto q = [m](double ch) {
        return static_cast<std::uint8_t>(std::clamp(std::lround(ch + m), 0L, 255L));
    };
    return {q(r), q(g), q(b)};
}

double pixel_brightness(std::uint8_t r, std::uint8_t g, std::uint8_t b, BrightnessModel model) noexcept
{
    if (model == BrightnessModel::Rec601) {
        return (299.0 * r + 587.0 * g + 114.0 * b) * 1e-3;
    }
    return std::sqrt((241.0 * r * r + 691.0 * g * g + 68.0 * b * b) * 1e-3);
}

namespace {

constexpr double sat_scale = 0x1.0p24;
constexpr double trig_scale = 0x1.0p30;
constexpr double bright_scale = 0x1.0p24;

using i128 = __int128;

/// Lookup tables shared by every frame.
struct PixelTables {
    // 255 * (v - min) / v in fixed point, indexed [v * 256 + min].
    std::array<std::uint32_t, 256 * 256> saturation{};
    // cos / sin of 60 * num / chroma degrees in fixed point, indexed [num * 256 + chroma].
    std::array<std::int32_t, 256 * 256> cos_phi{};
    std::array<std::int32_t, 256 * 256> sin_phi{};
    // Squared (perceived) or linear (Rec.601) channel weights scaled by 1000.
    std::array<std::uint32_t, 256> perceived_r{}, perceived_g{}, perceived_b{};
    std::array<std::uint32_t, 256> rec601_r{}, rec601_g{}, rec601_b{};

    PixelTables()
    {
        for (int v = 1; v < 256; ++v) {
            for (int mn = 0; mn <= v; ++mn) {
                saturation[v * 256 + mn] =
                    static_cast<std::uint32_t>(std::llround(255.0 * (v - mn) / v * sat_scale));
            }
        }
        cos_phi[0] = static_cast<std::int32_t>(trig_scale);
        for (int chroma = 1; chroma < 256; ++chroma) {
            for (int num = 0; num <= chroma; ++num) {
                const double phi = std::numbers::pi / 3.0 * num / chroma;
                cos_phi[num * 256 + chroma] = static_cast<std::int32_t>(std::llround(std::cos(phi) * trig_scale));
                sin_phi[num * 256 + chroma] = static_cast<std::int32_t>(std::llround(std::sin(phi) * trig_scale));
            }
        }
        for (std::uint32_t c = 0; c < 256; ++c) {
            perceived_r[c] = 241 * c * c;
            perceived_g[c] = 691 * c * c;
            perceived_b[c] = 68 * c * c;
            rec601_r[c] = 299 * c;
            rec601_g[c] = 587 * c;
            rec601_b[c] = 114 * c;
        }
    }
};

const PixelTables& tables()
{
    static const auto t = std::make_unique<PixelTables>();
    return *t;
}

double brightness_from_key(std::uint32_t key, BrightnessModel model) noexcept
{
    return model == BrightnessModel::Rec601 ? key * 1e-3 : std::sqrt(key * 1e-3);
}

/// Integer pixel sums; every field is an exact function of the pixel multiset.
struct PixelSums {
    std::size_t n = 0;
    std::int64_t r = 0, g = 0, b = 0, value = 0, saturation = 0;
    // Hue unit vectors grouped by sector base angle (0, 120, 240 degrees).
    std::array<std::int64_t, 3> cos_sum{}, sin_sum{};
    std::int64_t bright = 0;
    i128 bright_sq = 0;
    std::int64_t rg = 0, rg_sq = 0, yb2 = 0, yb2_sq = 0;
    double contrast = 0.0;
};

/// The rank_lo-th and rank_hi-th smallest brightness keys. A coarse histogram
/// locates the bucket of each rank; one pass over the keys gathers the members
/// of those two buckets for exact selection.
std::pair<std::uint32_t, std::uint32_t> key_order_statistics(std::span<const std::uint32_t> keys,
                                                             std::span<const std::uint32_t> hist, int shift,
                                                             std::size_t rank_lo, std::size_t rank_hi)
{
    const auto locate = [&](std::size_t rank) {
        std::size_t bucket = 0;
        std::size_t below = 0;
        while (below + hist[bucket] <= rank) {
            below += hist[bucket];
            ++bucket;
        }
        return std::pair{static_cast<std::uint32_t>(bucket), below};
    };
    const auto [bucket_lo, below_lo] = locate(rank_lo);
    const auto [bucket_hi, below_hi] = locate(rank_hi);

    thread_local std::vector<std::uint32_t> in_lo, in_hi;
    in_lo.clear();
    in_hi.clear();
    for (auto k : keys) {
        const std::uint32_t bucket = k >> shift;
        if (bucket == bucket_lo) {
            in_lo.push_back(k);
        } else if (bucket == bucket_hi) {
            in_hi.push_back(k);
        }
    }
    const auto select = [](std::vector<std::uint32_t>& v, std::size_t offset) {
        auto nth = v.begin() + static_cast<std::ptrdiff_t>(offset);
        std::nth_element(v.begin(), nth, v.end());
        return *nth;
    };
    const std::uint32_t lo = select(in_lo, rank_lo - below_lo);
    const std::uint32_t hi = bucket_hi == bucket_lo ? select(in_lo, rank_hi - below_lo) : select(in_hi, rank_hi - below_hi);
    return {lo, hi};
}

/// Channel order around the hue circle, starting after each sector base.
constexpr int next_channel[4] = {1, 2, 0, 1};

template <bool Rec601, bool WithContrast>
void accumulate_pixels(const std::uint8_t* px, std::size_t n, PixelSums& s, std::uint32_t* keys,
                       std::uint32_t* hist, int shift)
{
    const PixelTables& t = tables();
    const std::uint32_t* wr = Rec601 ? t.rec601_r.data() : t.perceived_r.data();
    const std::uint32_t* wg = Rec601 ? t.rec601_g.data() : t.perceived_g.data();
    const std::uint32_t* wb = Rec601 ? t.rec601_b.data() : t.perceived_b.data();
    const std::uint32_t* sat = t.saturation.data();
    const std::int32_t* cos_phi = t.cos_phi.data();
    const std::int32_t* sin_phi = t.sin_phi.data();

    // Two passes with few live accumulators each, so the loops stay in registers.
    std::int64_t value = 0, saturation = 0;
    std::int64_t cos_sum[3] = {0, 0, 0}, sin_sum[3] = {0, 0, 0};
    const std::uint8_t* p = px;
    for (std::size_t i = 0; i < n; ++i, p += 3) {
        const int r = p[0], g = p[1], b = p[2];
        // Sector of the largest channel; ties resolve to red, then green.
        // Computed without branches: noisy frames defeat the predictor.
        const int red_max = int(r >= g) & int(r >= b);
        const int base = (1 - red_max) * (1 + int(g < b));
        const int channel[3] = {r, g, b};
        const int mx = channel[base];
        const int mn = std::min(r, std::min(g, b));
        const int num = channel[next_channel[base]] - channel[next_channel[base + 1]];
        value += mx;
        saturation += sat[mx * 256 + mn];
        // Achromatic pixels land on index 0, which holds the unit vector at 0 degrees.
        const int idx = (num < 0 ? -num : num) * 256 + (mx - mn);
        const std::int32_t sn = sin_phi[idx];
        cos_sum[base] += cos_phi[idx];
        sin_sum[base] += num < 0 ? -sn : sn;
    }

    std::int64_t sr = 0, sg = 0, sb = 0, bright = 0, rg_sq = 0, yb2_sq = 0;
    unsigned __int128 bright_sq = 0;
    p = px;
    for (std::size_t i = 0; i < n; ++i, p += 3) {
        const int r = p[0], g = p[1], b = p[2];
        sr += r;
        sg += g;
        sb += b;
        const int rg = r - g;
        const int yb2 = r + g - 2 * b;
        rg_sq += rg * rg;
        yb2_sq += yb2 * yb2;

        const std::uint32_t key = wr[r] + wg[g] + wb[b];
        const double y = Rec601 ? key * 1e-3 : std::sqrt(key * 1e-3);
        const auto yfix = static_cast<std::int64_t>(y * bright_scale + 0.5);
        bright += yfix;
        bright_sq += static_cast<unsigned __int128>(static_cast<std::uint64_t>(yfix)) * static_cast<std::uint64_t>(yfix);
        if constexpr (WithContrast) {
            keys[i] = key;
            ++hist[key >> shift];
        }
    }

    s.r = sr;
    s.g = sg;
    s.b = sb;
    s.value = value;
    s.saturation = saturation;
    for (int k = 0; k < 3; ++k) {
        s.cos_sum[k] = cos_sum[k];
        s.sin_sum[k] = sin_sum[k];
    }
    s.bright = bright;
    s.bright_sq = static_cast<i128>(bright_sq);
    s.rg = sr - sg;
    s.rg_sq = rg_sq;
    s.yb2 = sr + sg - 2 * sb;
    s.yb2_sq = yb2_sq;
}

PixelSums accumulate(const Frame& frame, BrightnessModel model, bool with_contrast, double trim)
{
    if (frame.empty()) {
        throw DataError("frame has no pixels");
    }
    if (frame.pixels.size() != 3 * frame.pixel_count()) {
        throw DataError("frame buffer length does not match its dimensions");
    }
    if (!(trim >= 0.0 && trim < 0.5)) {
        throw ConfigError("contrast trim must lie in [0, 0.5)");
    }
    const bool rec601 = model == BrightnessModel::Rec601;
    // Key ranges: perceived <= 65,025,000, Rec.601 <= 255,000.
    const int shift = rec601 ? 5 : 13;
    const std::size_t buckets = ((rec601 ? 255000U : 65025000U) >> shift) + 1;

    PixelSums s;
    s.n = frame.pixel_count();
    thread_local std::vector<std::uint32_t> keys;
    thread_local std::vector<std::uint32_t> hist;
    if (with_contrast) {
        keys.resize(s.n);
        hist.assign(buckets, 0);
    }

    const std::uint8_t* px = frame.pixels.data();
    if (rec601) {
        with_contrast ? accumulate_pixels<true, true>(px, s.n, s, keys.data(), hist.data(), shift)
                      : accumulate_pixels<true, false>(px, s.n, s, nullptr, nullptr, shift);
    } else {
        with_contrast ? accumulate_pixels<false, true>(px, s.n, s, keys.data(), hist.data(), shift)
                      : accumulate_pixels<false, false>(px, s.n, s, nullptr, nullptr, shift);
    }

    if (with_contrast) {
        const auto k = static_cast<std::size_t>(std::floor(trim * static_cast<double>(s.n) + 1e-9));
        const auto [lo, hi] = key_order_statistics(keys, hist, shift, k, s.n - 1 - k);
        s.contrast = brightness_from_key(hi, model) - brightness_from_key(lo, model);
    }
    return s;
}

/// Population variance from integer sums: (n * sum_sq - sum^2) / n^2.
double population_variance(i128 n, i128 sum, i128 sum_sq)
{
    const i128 num = n * sum_sq - sum * sum;
    return static_cast<double>(static_cast<long double>(num) / (static_cast<long double>(n) * n));
}

BrightnessStats brightness_of(const PixelSums& s)
{
    const auto n = static_cast<double>(s.n);
    const double mean = static_cast<double>(s.bright) / (n * bright_scale);
    const double var = population_variance(static_cast<i128>(s.n), s.bright, s.bright_sq)
                       / (bright_scale * bright_scale);
    return {mean, std::sqrt(std::max(0.0, var))};
}

double colorfulness_of(const PixelSums& s)
{
    const auto n = static_cast<i128>(s.n);
    const double var_rg = population_variance(n, s.rg, s.rg_sq);
    const double var_yb = population_variance(n, s.yb2, s.yb2_sq) / 4.0;
    const double mean_rg = static_cast<double>(s.rg) / static_cast<double>(s.n);
    const double mean_yb = static_cast<double>(s.yb2) / (2.0 * static_cast<double>(s.n));
    return std::sqrt(var_rg + var_yb) + 0.3 * std::sqrt(mean_rg * mean_rg + mean_yb * mean_yb);
}

double hue_of(const PixelSums& s)
{
    constexpr double c120 = -0.5;
    constexpr double s120 = 0.86602540378443864676; // sqrt(3) / 2
    const std::array<double, 3> cb{1.0, c120, c120};
    const std::array<double, 3> sb{0.0, s120, -s120};
    double x = 0.0, y = 0.0;
    for (int i = 0; i < 3; ++i) {
        const auto c = static_cast<double>(s.cos_sum[i]);
        const auto sn = static_cast<double>(s.sin_sum[i]);
        x += cb[i] * c - sb[i] * sn;
        y += sb[i] * c + cb[i] * sn;
    }
    // Below one fixed-point unit per pixel the mean direction is undefined.
    if (std::hypot(x, y) < static_cast<double>(s.n) * 0.5) {
        return 0.0;
    }
    double deg = std::atan2(y, x) * (180.0 / std::numbers::pi);
    if (deg < 0.0) {
        deg += 360.0;
    }
    return deg >= 360.0 ? 0.0 : deg;
}

} // namespace

BrightnessStats perceived_brightness(const Frame& frame, BrightnessModel model)
{
    return brightness_of(accumulate(frame, model, false, 0.0));
}

double contrast(const Frame& frame, double trim, BrightnessModel model)
{
    return accumulate(frame, model, true, trim).contrast;
}

double colorfulness(const Frame& frame)
{
    return colorfulness_of(accumulate(frame, BrightnessModel::Perceived, false, 0.0));
}

FrameFeatures frame_features(const Frame& frame, const FeatureOptions& options)
{
    const PixelSums s = accumulate(frame, options.brightness, true, options.contrast_trim);
    const auto n = static_cast<double>(s.n);
    const BrightnessStats bright = brightness_of(s);

    FrameFeatures f;
    f[Feature::RgbRed] = static_cast<double>(s.r) / n;
    f[Feature::RgbGreen] = static_cast<double>(s.g) / n;
    f[Feature::RgbBlue] = static_cast<double>(s.b) / n;
    f[Feature::Hue] = hue_of(s) * (options.hue_half_scale ? 0.5 : 1.0);
    f[Feature::Saturation] = static_cast<double>(s.saturation) / (n * sat_scale);
    f[Feature::Value] = static_cast<double>(s.value) / n;
    f[Feature::Brightness] = bright.mean;
    f[Feature::BrightnessSd] = bright.sd;
    f[Feature::Contrast] = s.contrast;
    f[Feature::Colorfulness] = colorfulness_of(s);
    return f;
}

} // namespace vframe
