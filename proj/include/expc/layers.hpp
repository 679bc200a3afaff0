#pragma once

#include <cstddef>

#include "expc/conv.hpp"
#include "expc/tensor.hpp"

namespace expc {

enum class LayerKind { Conv, Dense };

/// Learnables of one layer. Conv weights are (3,3,ci,co), dense weights
/// are (n_in,n_out); bias has one entry per output channel/unit.
template <typename T>
struct LayerParams {
    LayerKind kind = LayerKind::Dense;
    Tensor<T> weights;
    Tensor<T> bias;
    std::size_t stride = 1;

    friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

template <typename T>
struct DenseGrads {
    Tensor<T> input;
    Tensor<T> weights;
    Tensor<T> bias;
};

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const LayerParams<T>& layer);
template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const LayerParams<T>& layer, const Tensor<T>& grad_out);

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& t);
/// Passes grad_out where t > 0; the derivative at exactly 0 is 0.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& t, const Tensor<T>& grad_out);

template <typename T>
Tensor<T> global_avg_pool_forward(const Tensor<T>& t);
template <typename T>
Tensor<T> global_avg_pool_backward(const Shape& input_shape, const Tensor<T>& grad_out);

/// y = x W + b
template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const LayerParams<T>& layer);
template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& x, const LayerParams<T>& layer, const Tensor<T>& grad_out);

/// Row-wise softmax with max subtraction.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

}  // namespace expc
