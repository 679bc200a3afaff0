#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "expc/layers.hpp"
#include "expc/tensor.hpp"

namespace expc {

enum class Variant : std::uint32_t { Conv = 0, Dense = 1 };

std::string to_string(Variant v);
Variant parse_variant(const std::string& name);

/// Architecture description.
///
/// Conv variant: Conv(c_0, stride s_0)+ReLU ... -> global average pool -> FC-2 -> softmax.
/// Dense variant: flatten -> Dense(h_0)+ReLU ... -> FC-2 -> softmax.
struct ModelConfig {
    Variant variant = Variant::Conv;
    std::size_t input_h = 128;
    std::size_t input_w = 128;
    std::size_t input_c = 3;
    std::vector<std::size_t> conv_channels{768, 384};
    std::vector<std::size_t> conv_strides{1, 2};
    std::vector<std::size_t> dense_hidden{768};
    std::size_t num_classes = 2;

    static ModelConfig conv(std::size_t size, std::vector<std::size_t> channels, std::size_t in_channels = 3);
    static ModelConfig dense(std::size_t size, std::vector<std::size_t> hidden, std::size_t in_channels = 3);

    /// Throws UsageError on inconsistent lists, zero extents or num_classes != 2.
    void validate() const;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Shape of one learnable layer, derived from a config alone.
struct LayerSpec {
    LayerKind kind;
    Shape weights;
    Shape bias;
    std::size_t stride = 1;
    std::string name;
};

std::vector<LayerSpec> layer_specs(const ModelConfig& config);

/// Exact number of scalar learnables.
std::uint64_t param_count(const ModelConfig& config);

template <typename T>
struct ModelParams {
    std::vector<LayerParams<T>> layers;

    std::size_t scalar_count() const;
    /// All scalars, layer order, weights before bias.
    std::vector<T> flatten() const;

    template <typename U>
    ModelParams<U> cast() const {
        ModelParams<U> out;
        for (const auto& l : layers)
            out.layers.push_back({l.kind, l.weights.template cast<U>(), l.bias.template cast<U>(), l.stride});
        return out;
    }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Gradients mirror the parameter layout.
template <typename T>
using ModelGrads = ModelParams<T>;

/// He-normal weights (std = sqrt(2 / fan_in)) and zero biases; fully
/// determined by `seed`.
template <typename T>
ModelParams<T> init_params(const ModelConfig& config, std::uint64_t seed);

template <typename T>
ModelParams<T> zero_params(const ModelConfig& config);

/// Throws ShapeError if `params` does not match `config`.
template <typename T>
void check_params(const ModelConfig& config, const ModelParams<T>& params);

/// Intermediates of a forward pass, consumed by model_backward.
template <typename T>
struct ForwardCache {
    ModelConfig config;
    std::size_t batch = 0;
    std::vector<Tensor<T>> layer_inputs;  // input to each learnable layer
    std::vector<Tensor<T>> pre_activations;  // ReLU inputs, one per hidden layer
    Tensor<T> logits;
};

template <typename T>
struct ForwardResult {
    Tensor<T> probabilities;
    ForwardCache<T> cache;
};

template <typename T>
ForwardResult<T> model_forward(const ModelConfig& config, const ModelParams<T>& params, const Tensor<T>& batch);

/// Gradient of the scalar loss whose gradient w.r.t. the logits is `grad_logits`.
template <typename T>
ModelGrads<T> model_backward(const ModelConfig& config, const ModelParams<T>& params, const ForwardCache<T>& cache,
                             const Tensor<T>& grad_logits);

}  // namespace expc
