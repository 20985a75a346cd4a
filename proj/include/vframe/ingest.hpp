#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vframe {

namespace fs = std::filesystem;

enum class Label { Conspiracy, Debunking, Normal, Unlabeled };

std::string_view to_string(Label label) noexcept;
std::optional<Label> parse_label(std::string_view text) noexcept;

/// One corpus entry of a dataset manifest.
struct VideoRecord {
    std::string id;
    Label label = Label::Unlabeled;
    std::optional<fs::path> video_path;
    std::optional<fs::path> frames_dir;
    /// Local path or http(s) URL.
    std::optional<std::string> thumbnail;
    std::optional<fs::path> transcript_path;
    std::optional<double> duration_s;

    bool has_visual_source() const noexcept { return video_path || frames_dir; }
};

/// Decoded 8-bit RGB raster, row-major, 3 bytes per pixel.
struct Frame {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;
    double timestamp_s = 0.0;
    std::size_t index = 0;

    std::size_t pixel_count() const noexcept
    {
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }
    bool empty() const noexcept { return pixel_count() == 0; }

    /// Builds a frame, validating the buffer length against the dimensions.
    static Frame from_rgb(int width, int height, std::vector<std::uint8_t> pixels,
                          double timestamp_s = 0.0, std::size_t index = 0);
    /// Frame filled with one colour.
    static Frame uniform(int width, int height, std::uint8_t r, std::uint8_t g, std::uint8_t b);
};

/// Portion of a video analysed as a unit.
class Segment {
public:
    enum class Kind { AllFrames, FirstSeconds, MiddleSeconds, Thumbnail };

    static Segment all_frames() { return Segment(Kind::AllFrames, 0.0); }
    static Segment first_seconds(double n);
    static Segment middle_seconds(double n);
    static Segment thumbnail() { return Segment(Kind::Thumbnail, 0.0); }

    /// Parses "all", "thumbnail", "first<N>s", "middle<N>s".
    static Segment parse(std::string_view text);

    Kind kind() const noexcept { return kind_; }
    double seconds() const noexcept { return seconds_; }

    /// Canonical name, inverse of parse(): "all", "first10s", "middle10s", "thumbnail".
    std::string name() const;

    friend bool operator==(const Segment&, const Segment&) = default;

private:
    Segment(Kind kind, double seconds) : kind_(kind), seconds_(seconds) {}

    Kind kind_;
    double seconds_;
};

struct ManifestOptions {
    /// Reject records that have neither video_path nor frames_dir.
    bool require_visual_source = true;
};

/// Reads a JSON Lines manifest. Relative paths are resolved against the
/// manifest's directory; unknown fields are ignored; order is preserved.
std::vector<VideoRecord> load_manifest(const fs::path& path, const ManifestOptions& options = {});

/// Decodes a binary (P6) or ASCII (P3) pixmap, or a binary graymap (P5).
Frame decode_image(const fs::path& path);
/// Same as decode_image but from an in-memory buffer.
Frame decode_image(std::span<const std::uint8_t> bytes);

/// Serializes a frame as binary P6 with maxval 255.
std::vector<std::uint8_t> encode_ppm(const Frame& frame);
void write_ppm(const fs::path& path, const Frame& frame);

/// Default decoder template, for an ffmpeg binary on PATH.
inline constexpr std::string_view default_decoder_command =
    "ffmpeg -nostdin -loglevel error -i {input} -vf fps={rate} -start_number 0 {out_pattern}";

/// Runs the external decoder for one record and returns the number of frame
/// files present in out_dir afterwards. The template's {input}, {rate} and
/// {out_pattern} placeholders are substituted with shell-quoted values; the
/// output pattern is `<out_dir>/%06d.ppm`.
std::size_t extract_frames(const VideoRecord& record, double rate_fps, const fs::path& out_dir,
                           std::string_view decoder_cmd = default_decoder_command);

/// Frame files (`<digits>.<ext>`) in a directory, ordered by numeric index.
std::vector<fs::path> list_frame_files(const fs::path& dir);

/// Decodes every frame file in `dir`; frame i gets timestamp i / rate_fps.
std::vector<Frame> load_frames(const fs::path& dir, double rate_fps, unsigned workers = 1);

struct FetchOptions {
    std::chrono::seconds timeout{30};
};

/// Downloads `url` to out_path. Skips the transfer when out_path already exists
/// with the byte length the server reports. Honours HTTP_PROXY / HTTPS_PROXY.
fs::path fetch_thumbnail(std::string_view url, const fs::path& out_path,
                         const FetchOptions& options = {});

/// Half-open index range [first, second) of the frames that fall into a
/// segment, given per-frame timestamps in ascending order.
std::pair<std::size_t, std::size_t> segment_bounds(std::span<const double> timestamps,
                                                   const Segment& segment, double rate_fps = 1.0);

/// Frames belonging to `segment`. Short inputs are clamped (all frames returned).
std::vector<Frame> select_segment(std::span<const Frame> frames, const Segment& segment,
                                  double rate_fps = 1.0);

} // namespace vframe
