#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "expc/model.hpp"

namespace expc {

// Model file layout, all integers u32 little-endian:
//
//   "EXPC"  version(=1)
//   variant  input_h  input_w  input_c
//   n  conv_channels[n]
//   n  conv_strides[n]
//   n  dense_hidden[n]
//   param_count x f32 little-endian, layer order, weights then bias
inline constexpr std::uint32_t kModelFileVersion = 1;

std::vector<std::uint8_t> serialize_model(const ModelConfig& config, const ModelParams<float>& params);

struct LoadedModel {
    ModelConfig config;
    ModelParams<float> params;
};

/// Throws FormatError on bad magic/version/header, CorruptionError on a
/// payload of the wrong length or any non-finite float.
LoadedModel deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const std::filesystem::path& path, const ModelConfig& config, const ModelParams<float>& params);
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace expc
