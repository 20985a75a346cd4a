#include <vframe/ingest.hpp>

#include <vframe/core/error.hpp>
#include <vframe/core/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <regex>
#include <sys/wait.h>
#include <unistd.h>

namespace vframe {

Segment Segment::first_seconds(double n)
{
    if (!(n > 0.0)) {
        throw ConfigError("segment length must be positive");
    }
    return Segment(Kind::FirstSeconds, n);
}

Segment Segment::middle_seconds(double n)
{
    if (!(n > 0.0)) {
        throw ConfigError("segment length must be positive");
    }
    return Segment(Kind::MiddleSeconds, n);
}

Segment Segment::parse(std::string_view text)
{
    if (text == "all") {
        return all_frames();
    }
    if (text == "thumbnail") {
        return thumbnail();
    }
    static const std::regex pattern(R"((first|middle)(\d+(?:\.\d+)?)s)");
    std::cmatch m;
    if (std::regex_match(text.begin(), text.end(), m, pattern)) {
        const double n = std::stod(m[2].str());
        return m[1] == "first" ? first_seconds(n) : middle_seconds(n);
    }
    throw ConfigError("unknown segment '" + std::string(text)
                      + "' (expected all, thumbnail, first<N>s or middle<N>s)");
}

std::string Segment::name() const
{
    auto secs = [this] {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", seconds_);
        return std::string(buf);
    };
    switch (kind_) {
    case Kind::AllFrames: return "all";
    case Kind::FirstSeconds: return "first" + secs() + "s";
    case Kind::MiddleSeconds: return "middle" + secs() + "s";
    case Kind::Thumbnail: return "thumbnail";
    }
    return "all";
}

std::pair<std::size_t, std::size_t> segment_bounds(std::span<const double> timestamps,
                                                   const Segment& segment, double rate_fps)
{
    const std::size_t n = timestamps.size();
    if (n == 0) {
        throw DataError("cannot select a segment from an empty frame list");
    }
    switch (segment.kind()) {
    case Segment::Kind::AllFrames:
    case Segment::Kind::Thumbnail:
        return {0, n};
    case Segment::Kind::FirstSeconds: {
        const auto end = std::lower_bound(timestamps.begin(), timestamps.end(), segment.seconds());
        // Frame 0 is always kept so the result is nonempty.
        return {0, std::max<std::size_t>(1, static_cast<std::size_t>(end - timestamps.begin()))};
    }
    case Segment::Kind::MiddleSeconds: {
        if (!(rate_fps > 0.0)) {
            throw ConfigError("frame rate must be positive");
        }
        const double wanted = std::floor(segment.seconds() * rate_fps + 1e-9);
        const std::size_t k = std::clamp<std::size_t>(static_cast<std::size_t>(wanted), 1, n);
        const std::size_t first = (n - k) / 2;
        return {first, first + k};
    }
    }
    return {0, n};
}

std::vector<Frame> select_segment(std::span<const Frame> frames, const Segment& segment, double rate_fps)
{
    std::vector<double> ts;
    ts.reserve(frames.size());
    for (const auto& f : frames) {
        ts.push_back(f.timestamp_s);
    }
    const auto [first, last] = segment_bounds(ts, segment, rate_fps);
    return {frames.begin() + static_cast<std::ptrdiff_t>(first),
            frames.begin() + static_cast<std::ptrdiff_t>(last)};
}

std::vector<fs::path> list_frame_files(const fs::path& dir)
{
    static const std::regex name_pattern(R"((\d+)\.[A-Za-z0-9]+)");
    std::vector<std::pair<unsigned long long, fs::path>> found;
    if (!fs::is_directory(dir)) {
        return {};
    }
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) {
            continue;
        }
        const std::string name = entry.path().filename().string();
        std::smatch m;
        if (std::regex_match(name, m, name_pattern)) {
            found.emplace_back(std::stoull(m[1].str()), entry.path());
        }
    }
    std::sort(found.begin(), found.end());
    std::vector<fs::path> out;
    out.reserve(found.size());
    for (auto& [idx, p] : found) {
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<Frame> load_frames(const fs::path& dir, double rate_fps, unsigned workers)
{
    if (!(rate_fps > 0.0)) {
        throw ConfigError("frame rate must be positive");
    }
    const auto files = list_frame_files(dir);
    std::vector<Frame> frames(files.size());
    parallel_for(files.size(), workers, [&](std::size_t i) {
        frames[i] = decode_image(files[i]);
        frames[i].index = i;
        frames[i].timestamp_s = static_cast<double>(i) / rate_fps;
    });
    return frames;
}

namespace {

std::string shell_quote(std::string_view s)
{
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    out += '\'';
    return out;
}

void replace_all(std::string& s, std::string_view from, const std::string& to)
{
    for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
        s.replace(pos, from.size(), to);
    }
}

std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string format_rate(double rate)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", rate);
    return buf;
}

} // namespace

std::size_t extract_frames(const VideoRecord& record, double rate_fps, const fs::path& out_dir,
                           std::string_view decoder_cmd)
{
    if (!record.video_path) {
        throw DataError("record '" + record.id + "' has no video_path to extract from");
    }
    if (!(rate_fps > 0.0)) {
        throw ConfigError("frame rate must be positive");
    }
    for (std::string_view ph : {"{input}", "{rate}", "{out_pattern}"}) {
        if (decoder_cmd.find(ph) == std::string_view::npos) {
            throw ConfigError("decoder command template lacks the " + std::string(ph)
                              + " placeholder: " + std::string(decoder_cmd));
        }
    }
    fs::create_directories(out_dir);

    std::string cmd(decoder_cmd);
    replace_all(cmd, "{input}", shell_quote(record.video_path->string()));
    replace_all(cmd, "{rate}", shell_quote(format_rate(rate_fps)));
    replace_all(cmd, "{out_pattern}", shell_quote((out_dir / "%06d.ppm").string()));

    const fs::path err_path = out_dir / (".decoder-stderr-" + std::to_string(::getpid()));
    const std::string full = "( " + cmd + " ) </dev/null >/dev/null 2>" + shell_quote(err_path.string());
    const int status = std::system(full.c_str());
    std::string err = read_file(err_path);
    std::error_code ec;
    fs::remove(err_path, ec);
    while (!err.empty() && (err.back() == '\n' || err.back() == '\r')) {
        err.pop_back();
    }

    if (status == -1) {
        throw ExternalError("[" + record.id + "] could not launch decoder");
    }
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    if (code == 127) {
        throw ExternalError("[" + record.id + "] decoder command not found (exit 127); check the "
                            "decoder_command template '" + std::string(decoder_cmd) + "': " + err);
    }
    if (code != 0) {
        throw ExternalError("[" + record.id + "] decoder exited with status " + std::to_string(code)
                            + ": " + err);
    }
    const std::size_t count = list_frame_files(out_dir).size();
    if (count == 0) {
        throw ExternalError("[" + record.id + "] decoder produced zero frames in " + out_dir.string());
    }
    return count;
}

} // namespace vframe
