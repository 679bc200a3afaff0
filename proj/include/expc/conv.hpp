#pragma once

#include <cstddef>

#include "expc/tensor.hpp"

namespace expc {

/// Convolutions are always 3x3.
inline constexpr std::size_t kKernelSize = 3;

/// "Same" padding geometry: out = ceil(in / stride); the total padding is
/// split with floor(total / 2) on the leading edge and the rest trailing.
struct ConvGeometry {
    std::size_t in_h = 0, in_w = 0;
    std::size_t out_h = 0, out_w = 0;
    std::size_t pad_top = 0, pad_left = 0;
    std::size_t stride = 1;

    static ConvGeometry same(std::size_t in_h, std::size_t in_w, std::size_t stride);
};

template <typename T>
struct ConvGrads {
    Tensor<T> input;    // (n,h,w,ci)
    Tensor<T> weights;  // (3,3,ci,co)
    Tensor<T> bias;     // (co)
};

// Both namespaces implement identical math. `reference` is the direct
// sliding-window form, single threaded, kept as the test oracle and the
// benchmark baseline. `parallel` gathers patches row by row and runs the
// patch x weight products under OpenMP. Every output element is owned by
// exactly one thread and accumulated in a fixed order, so results do not
// depend on the thread count.

namespace reference {

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                         std::size_t stride);

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& weights, std::size_t stride,
                             const Tensor<T>& grad_out);

}  // namespace reference

namespace parallel {

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                         std::size_t stride);

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& weights, std::size_t stride,
                             const Tensor<T>& grad_out);

}  // namespace parallel

namespace detail {
// Throws ShapeError unless input/weights/bias/stride are mutually consistent.
template <typename T>
ConvGeometry check_conv_args(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>* bias,
                             std::size_t stride);
template <typename T>
void check_grad_out(const Tensor<T>& grad_out, const Tensor<T>& input, const Tensor<T>& weights,
                    const ConvGeometry& g);
}  // namespace detail

}  // namespace expc
