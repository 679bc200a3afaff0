#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "expc/image.hpp"

namespace expc {

/// Lower/upper bound of the exposure shift magnitude, in stops.
inline constexpr double kMinExposureShift = 1.5;
inline constexpr double kMaxExposureShift = 3.0;

/// clamp(round(v * 2^ev), 0, 255) per channel.
RawImage apply_exposure(const RawImage& image, double ev);

struct SynthEntry {
    std::string name;
    std::string cls;  // "pri" or "exp"
    double ev = 0.0;  // 0 for pristine images
};

/// Writes `count_per_class` seeded scenes as pri.NNNN.ppm, an exposure
/// shifted twin of each as exp.NNNN.ppm, and manifest.tsv. Returns the
/// manifest rows in the order they were written.
std::vector<SynthEntry> synth_generate(const std::filesystem::path& out_dir, std::size_t count_per_class,
                                       std::uint64_t seed, std::size_t size);

/// The scene generator on its own; same seed and index give the same image.
RawImage synth_scene(std::uint64_t seed, std::size_t index, std::size_t size);

}  // namespace expc
