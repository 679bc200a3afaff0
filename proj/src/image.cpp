#include "expc/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "expc/error.hpp"

namespace expc {

namespace {

class HeaderReader {
public:
    HeaderReader(std::span<const std::uint8_t> bytes, std::size_t pos) : bytes_(bytes), pos_(pos) {}

    std::size_t pos() const { return pos_; }

    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    std::size_t read_uint(const char* what) {
        skip_space_and_comments();
        const std::size_t start = pos_;
        std::size_t value = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > 1u << 24) throw FormatError(std::string("PPM ") + what + " too large", start);
            ++pos_;
        }
        if (pos_ == start) throw FormatError(std::string("PPM header: expected ") + what, start);
        return value;
    }

    void expect_single_space() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
            throw FormatError("PPM header: expected whitespace before pixel data", pos_);
        ++pos_;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_;
};

}  // namespace

RawImage decode_ppm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw FormatError("not a binary PPM (P6)", 0);
    HeaderReader body(bytes, 2);
    const std::size_t width = body.read_uint("width");
    const std::size_t height = body.read_uint("height");
    body.skip_space_and_comments();
    const std::size_t maxval_offset = body.pos();
    const std::size_t maxval = body.read_uint("maxval");
    if (maxval != 255) throw FormatError("unsupported PPM maxval " + std::to_string(maxval), maxval_offset);
    body.expect_single_space();
    if (width == 0 || height == 0) throw FormatError("PPM with zero extent", 2);

    const std::size_t payload_at = body.pos();
    const std::size_t need = width * height * RawImage::kChannels;
    if (bytes.size() - payload_at < need)
        throw FormatError("truncated PPM payload: need " + std::to_string(need) + " bytes, have " +
                              std::to_string(bytes.size() - payload_at),
                          bytes.size());
    RawImage img(height, width);
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(payload_at), need, img.pixels.begin());
    return img;
}

std::vector<std::uint8_t> encode_ppm(const RawImage& image) {
    if (image.pixels.size() != image.height * image.width * RawImage::kChannels || image.height == 0 ||
        image.width == 0)
        throw UsageError("encode_ppm: inconsistent image buffer");
    const std::string header = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), image.pixels.begin(), image.pixels.end());
    return out;
}

RawImage read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_ppm(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_ppm(const std::filesystem::path& path, const RawImage& image) {
    const auto bytes = encode_ppm(image);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
}

RawImage resize_bilinear(const RawImage& image, std::size_t target_h, std::size_t target_w) {
    if (image.height == 0 || image.width == 0 || target_h == 0 || target_w == 0)
        throw UsageError("resize_bilinear: extents must be positive");
    struct Tap {
        std::size_t lo, hi;
        double frac;
    };
    auto taps = [](std::size_t src, std::size_t dst) {
        std::vector<Tap> t(dst);
        const double scale = static_cast<double>(src) / static_cast<double>(dst);
        for (std::size_t d = 0; d < dst; ++d) {
            double s = (static_cast<double>(d) + 0.5) * scale - 0.5;
            s = std::clamp(s, 0.0, static_cast<double>(src - 1));
            const auto lo = static_cast<std::size_t>(s);
            t[d] = {lo, std::min(lo + 1, src - 1), s - static_cast<double>(lo)};
        }
        return t;
    };
    const auto ty = taps(image.height, target_h);
    const auto tx = taps(image.width, target_w);
    RawImage out(target_h, target_w);
    for (std::size_t y = 0; y < target_h; ++y)
        for (std::size_t x = 0; x < target_w; ++x)
            for (std::size_t c = 0; c < RawImage::kChannels; ++c) {
                const double top = image.at(ty[y].lo, tx[x].lo, c) * (1 - tx[x].frac) + image.at(ty[y].lo, tx[x].hi, c) * tx[x].frac;
                const double bot = image.at(ty[y].hi, tx[x].lo, c) * (1 - tx[x].frac) + image.at(ty[y].hi, tx[x].hi, c) * tx[x].frac;
                const double v = top * (1 - ty[y].frac) + bot * ty[y].frac;
                out.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
    return out;
}

Tensor<float> to_float_scaled(const RawImage& image) {
    Tensor<float> t(Shape{image.height, image.width, RawImage::kChannels});
    for (std::size_t i = 0; i < image.pixels.size(); ++i) t[i] = static_cast<float>(image.pixels[i]) / 255.0f;
    return t;
}

}  // namespace expc
