#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "expc/tensor.hpp"

namespace expc {

/// One-hot index order is fixed: Exposure -> 0, Pristine -> 1.
enum class LabelClass : std::size_t { Exposure = 0, Pristine = 1 };

inline constexpr std::size_t kNumClasses = 2;

std::string_view class_prefix(LabelClass label);

/// "exp.0001.ppm" -> Exposure, "PRI.7" -> Pristine. Throws LabelError
/// naming the file for anything else.
LabelClass label_from_filename(std::string_view name);

std::array<float, kNumClasses> one_hot(LabelClass label);

struct ImageSample {
    Tensor<float> pixels;  // (h, w, 3) in [0, 1]
    LabelClass label = LabelClass::Exposure;
    std::string source_name;
};

struct Dataset {
    std::vector<ImageSample> samples;

    std::size_t size() const noexcept { return samples.size(); }
    bool empty() const noexcept { return samples.empty(); }
    std::array<std::size_t, kNumClasses> class_counts() const;
};

/// Decodes, resizes to target x target, scales to [0,1] and labels every
/// PPM in `dir`, ordered by file name. Fails on the first bad file; no
/// partial dataset is returned.
Dataset load_directory(const std::filesystem::path& dir, std::size_t target_size);

}  // namespace expc
