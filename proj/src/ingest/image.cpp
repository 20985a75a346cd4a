#include <vframe/ingest.hpp>

#include <vframe/core/error.hpp>

#include <cctype>
#include <fstream>
#include <iterator>

namespace vframe {

Frame Frame::from_rgb(int width, int height, std::vector<std::uint8_t> pixels, double timestamp_s,
                      std::size_t index)
{
    if (width <= 0 || height <= 0) {
        throw DataError("frame dimensions must be positive");
    }
    const std::size_t expected = 3ULL * static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (pixels.size() != expected) {
        throw DataError("pixel buffer holds " + std::to_string(pixels.size()) + " bytes, expected "
                        + std::to_string(expected));
    }
    if (timestamp_s < 0.0) {
        throw DataError("frame timestamp must be non-negative");
    }
    Frame f;
    f.width = width;
    f.height = height;
    f.pixels = std::move(pixels);
    f.timestamp_s = timestamp_s;
    f.index = index;
    return f;
}

Frame Frame::uniform(int width, int height, std::uint8_t r, std::uint8_t g, std::uint8_t b)
{
    std::vector<std::uint8_t> px(3ULL * static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    for (std::size_t i = 0; i < px.size(); i += 3) {
        px[i] = r;
        px[i + 1] = g;
        px[i + 2] = b;
    }
    return from_rgb(width, height, std::move(px));
}

namespace {

class HeaderReader {
public:
    explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    void skip_space_and_comments()
    {
        while (pos_ < bytes_.size()) {
            const auto c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') {
                    ++pos_;
                }
            } else if (std::isspace(c)) {
                ++pos_;
            } else {
                return;
            }
        }
    }

    long read_int(const char* what)
    {
        skip_space_and_comments();
        if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
            throw ParseError(std::string("pixmap header: expected ") + what);
        }
        long v = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            v = v * 10 + (bytes_[pos_] - '0');
            if (v > 1'000'000'000L) {
                throw ParseError(std::string("pixmap header: ") + what + " out of range");
            }
            ++pos_;
        }
        return v;
    }

    std::size_t& pos() { return pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

} // namespace

Frame decode_image(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '6' && bytes[1] != '5' && bytes[1] != '3')) {
        if (bytes.size() >= 4 && bytes[0] == 0x89 && bytes[1] == 'P' && bytes[2] == 'N' && bytes[3] == 'G') {
            throw ParseError("unsupported image format: PNG (convert frames to PPM)");
        }
        if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
            throw ParseError("unsupported image format: JPEG (convert frames to PPM)");
        }
        throw ParseError("unsupported image format (expected P6, P5 or P3 pixmap)");
    }
    const char kind = static_cast<char>(bytes[1]);
    HeaderReader hdr(bytes);
    hdr.pos() = 2;
    const long width = hdr.read_int("width");
    const long height = hdr.read_int("height");
    const long maxval = hdr.read_int("maxval");
    if (width <= 0 || height <= 0) {
        throw ParseError("pixmap header: dimensions must be positive");
    }
    if (maxval != 255) {
        throw ParseError("pixmap maxval " + std::to_string(maxval) + " is not supported (must be 255)");
    }

    const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    std::vector<std::uint8_t> px(3 * count);

    if (kind == '3') {
        for (std::size_t i = 0; i < px.size(); ++i) {
            long v;
            try {
                v = hdr.read_int("sample");
            } catch (const ParseError&) {
                throw ParseError("truncated pixmap: expected " + std::to_string(px.size())
                                 + " samples, found " + std::to_string(i));
            }
            if (v > 255) {
                throw ParseError("pixmap sample exceeds maxval");
            }
            px[i] = static_cast<std::uint8_t>(v);
        }
    } else {
        // Exactly one whitespace byte separates the header from the raster.
        std::size_t pos = hdr.pos();
        if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
            throw ParseError("truncated pixmap: missing raster");
        }
        ++pos;
        const std::size_t channels = kind == '6' ? 3 : 1;
        const std::size_t need = channels * count;
        if (bytes.size() - pos < need) {
            throw ParseError("truncated pixmap: expected " + std::to_string(need) + " raster bytes, found "
                             + std::to_string(bytes.size() - pos));
        }
        const auto raster = bytes.subspan(pos, need);
        if (channels == 3) {
            std::copy(raster.begin(), raster.end(), px.begin());
        } else {
            for (std::size_t i = 0; i < count; ++i) {
                px[3 * i] = px[3 * i + 1] = px[3 * i + 2] = raster[i];
            }
        }
    }
    return Frame::from_rgb(static_cast<int>(width), static_cast<int>(height), std::move(px));
}

Frame decode_image(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open image " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_image(std::span<const std::uint8_t>(bytes));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_ppm(const Frame& frame)
{
    const std::string header =
        "P6\n" + std::to_string(frame.width) + " " + std::to_string(frame.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), frame.pixels.begin(), frame.pixels.end());
    return out;
}

void write_ppm(const fs::path& path, const Frame& frame)
{
    const auto bytes = encode_ppm(frame);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write image " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

} // namespace vframe
