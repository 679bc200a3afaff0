#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "expc/tensor.hpp"

namespace expc {

/// 8-bit interleaved RGB image, row-major.
struct RawImage {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> pixels;  // height * width * 3

    static constexpr std::size_t kChannels = 3;

    RawImage() = default;
    RawImage(std::size_t h, std::size_t w, std::uint8_t fill = 0) : height(h), width(w), pixels(h * w * kChannels, fill) {}

    std::uint8_t& at(std::size_t y, std::size_t x, std::size_t c) { return pixels[(y * width + x) * kChannels + c]; }
    std::uint8_t at(std::size_t y, std::size_t x, std::size_t c) const { return pixels[(y * width + x) * kChannels + c]; }

    friend bool operator==(const RawImage&, const RawImage&) = default;
};

/// Binary PPM (P6), maxval 255. Header comments are accepted on decode.
/// Throws FormatError carrying the byte offset of the problem.
RawImage decode_ppm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_ppm(const RawImage& image);

RawImage read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const RawImage& image);

/// Bilinear resampling with half-pixel centres: a destination pixel d maps
/// to source coordinate (d + 0.5) * src / dst - 0.5, clamped to the image.
RawImage resize_bilinear(const RawImage& image, std::size_t target_h, std::size_t target_w);

/// (h,w,3) tensor of v / 255.
Tensor<float> to_float_scaled(const RawImage& image);

}  // namespace expc
