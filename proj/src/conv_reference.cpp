#include <cstddef>

#include "expc/conv.hpp"

namespace expc {

ConvGeometry ConvGeometry::same(std::size_t in_h, std::size_t in_w, std::size_t stride) {
    if (stride == 0) throw ShapeError("convolution stride must be positive");
    ConvGeometry g;
    g.in_h = in_h;
    g.in_w = in_w;
    g.stride = stride;
    g.out_h = (in_h + stride - 1) / stride;
    g.out_w = (in_w + stride - 1) / stride;
    auto total = [&](std::size_t in, std::size_t out) -> std::size_t {
        const std::size_t need = (out - 1) * stride + kKernelSize;
        return need > in ? need - in : 0;
    };
    g.pad_top = total(in_h, g.out_h) / 2;
    g.pad_left = total(in_w, g.out_w) / 2;
    return g;
}

namespace detail {

template <typename T>
ConvGeometry check_conv_args(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>* bias,
                             std::size_t stride) {
    if (input.rank() != 4) throw ShapeError("conv2d input must be (n,h,w,c), got " + input.shape().to_string());
    if (weights.rank() != 4 || weights.dim(0) != kKernelSize || weights.dim(1) != kKernelSize)
        throw ShapeError("conv2d weights must be (3,3,ci,co), got " + weights.shape().to_string());
    if (weights.dim(2) != input.dim(3))
        throw ShapeError("conv2d channel mismatch: input has " + std::to_string(input.dim(3)) +
                         " channels, weights expect " + std::to_string(weights.dim(2)));
    if (bias && (bias->rank() != 1 || bias->dim(0) != weights.dim(3)))
        throw ShapeError("conv2d bias must have " + std::to_string(weights.dim(3)) + " entries");
    return ConvGeometry::same(input.dim(1), input.dim(2), stride);
}

template <typename T>
void check_grad_out(const Tensor<T>& grad_out, const Tensor<T>& input, const Tensor<T>& weights,
                    const ConvGeometry& g) {
    const Shape expected{input.dim(0), g.out_h, g.out_w, weights.dim(3)};
    if (grad_out.shape() != expected)
        throw ShapeError("conv2d grad_out must be " + expected.to_string() + ", got " +
                         grad_out.shape().to_string());
}

template ConvGeometry check_conv_args(const Tensor<float>&, const Tensor<float>&, const Tensor<float>*, std::size_t);
template ConvGeometry check_conv_args(const Tensor<double>&, const Tensor<double>&, const Tensor<double>*, std::size_t);
template void check_grad_out(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&, const ConvGeometry&);
template void check_grad_out(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&, const ConvGeometry&);

}  // namespace detail

namespace reference {

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                         std::size_t stride) {
    const ConvGeometry g = detail::check_conv_args(input, weights, &bias, stride);
    const std::size_t n = input.dim(0), ci = input.dim(3), co = weights.dim(3);
    Tensor<T> out(Shape{n, g.out_h, g.out_w, co});
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t oy = 0; oy < g.out_h; ++oy)
            for (std::size_t ox = 0; ox < g.out_w; ++ox)
                for (std::size_t o = 0; o < co; ++o) {
                    T acc = bias[o];
                    for (std::size_t dy = 0; dy < kKernelSize; ++dy)
                        for (std::size_t dx = 0; dx < kKernelSize; ++dx) {
                            const auto y = static_cast<std::ptrdiff_t>(oy * stride + dy) -
                                           static_cast<std::ptrdiff_t>(g.pad_top);
                            const auto x = static_cast<std::ptrdiff_t>(ox * stride + dx) -
                                           static_cast<std::ptrdiff_t>(g.pad_left);
                            if (y < 0 || x < 0 || y >= static_cast<std::ptrdiff_t>(g.in_h) ||
                                x >= static_cast<std::ptrdiff_t>(g.in_w))
                                continue;
                            for (std::size_t i = 0; i < ci; ++i)
                                acc += input.at(b, y, x, i) * weights.at(dy, dx, i, o);
                        }
                    out.at(b, oy, ox, o) = acc;
                }
    return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& weights, std::size_t stride,
                             const Tensor<T>& grad_out) {
    const ConvGeometry g = detail::check_conv_args<T>(input, weights, nullptr, stride);
    detail::check_grad_out(grad_out, input, weights, g);
    const std::size_t n = input.dim(0), ci = input.dim(3), co = weights.dim(3);
    ConvGrads<T> grads{Tensor<T>(input.shape()), Tensor<T>(weights.shape()), Tensor<T>(Shape{co})};
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t oy = 0; oy < g.out_h; ++oy)
            for (std::size_t ox = 0; ox < g.out_w; ++ox)
                for (std::size_t o = 0; o < co; ++o) {
                    const T go = grad_out.at(b, oy, ox, o);
                    grads.bias[o] += go;
                    for (std::size_t dy = 0; dy < kKernelSize; ++dy)
                        for (std::size_t dx = 0; dx < kKernelSize; ++dx) {
                            const auto y = static_cast<std::ptrdiff_t>(oy * stride + dy) -
                                           static_cast<std::ptrdiff_t>(g.pad_top);
                            const auto x = static_cast<std::ptrdiff_t>(ox * stride + dx) -
                                           static_cast<std::ptrdiff_t>(g.pad_left);
                            if (y < 0 || x < 0 || y >= static_cast<std::ptrdiff_t>(g.in_h) ||
                                x >= static_cast<std::ptrdiff_t>(g.in_w))
                                continue;
                            for (std::size_t i = 0; i < ci; ++i) {
                                grads.weights.at(dy, dx, i, o) += input.at(b, y, x, i) * go;
                                grads.input.at(b, y, x, i) += weights.at(dy, dx, i, o) * go;
                            }
                        }
                }
    return grads;
}

template Tensor<float> conv2d_forward(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&, std::size_t);
template Tensor<double> conv2d_forward(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&, std::size_t);
template ConvGrads<float> conv2d_backward(const Tensor<float>&, const Tensor<float>&, std::size_t, const Tensor<float>&);
template ConvGrads<double> conv2d_backward(const Tensor<double>&, const Tensor<double>&, std::size_t, const Tensor<double>&);

}  // namespace reference
}  // namespace expc
