#include <algorithm>
#include <cstddef>
#include <vector>

#include "expc/conv.hpp"

namespace expc::parallel {

namespace {

// Source coordinate for output index `o` and kernel tap `d`, or -1 when it
// falls into the zero padding.
inline std::ptrdiff_t source_index(std::size_t o, std::size_t d, std::size_t stride, std::size_t pad,
                                   std::size_t extent) {
    const auto v = static_cast<std::ptrdiff_t>(o * stride + d) - static_cast<std::ptrdiff_t>(pad);
    return (v < 0 || v >= static_cast<std::ptrdiff_t>(extent)) ? -1 : v;
}

}  // namespace

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                         std::size_t stride) {
    const ConvGeometry g = detail::check_conv_args(input, weights, &bias, stride);
    const std::size_t n = input.dim(0), ci = input.dim(3), co = weights.dim(3);
    const std::size_t patch_len = kKernelSize * kKernelSize * ci;
    Tensor<T> out(Shape{n, g.out_h, g.out_w, co});
    const T* in = input.raw();
    const T* w = weights.raw();
    const T* bs = bias.raw();
    T* dst = out.raw();
    const auto rows = static_cast<std::ptrdiff_t>(n * g.out_h);

#pragma omp parallel
    {
        std::vector<T> patch(patch_len);
#pragma omp for schedule(static)
        for (std::ptrdiff_t r = 0; r < rows; ++r) {
            const std::size_t b = static_cast<std::size_t>(r) / g.out_h;
            const std::size_t oy = static_cast<std::size_t>(r) % g.out_h;
            const T* img = in + b * g.in_h * g.in_w * ci;
            for (std::size_t ox = 0; ox < g.out_w; ++ox) {
                T* p = patch.data();
                for (std::size_t dy = 0; dy < kKernelSize; ++dy) {
                    const auto y = source_index(oy, dy, stride, g.pad_top, g.in_h);
                    for (std::size_t dx = 0; dx < kKernelSize; ++dx, p += ci) {
                        const auto x = source_index(ox, dx, stride, g.pad_left, g.in_w);
                        if (y < 0 || x < 0) {
                            std::fill(p, p + ci, T(0));
                        } else {
                            const T* src = img + (static_cast<std::size_t>(y) * g.in_w + x) * ci;
                            std::copy(src, src + ci, p);
                        }
                    }
                }
                T* acc = dst + ((b * g.out_h + oy) * g.out_w + ox) * co;
                std::copy(bs, bs + co, acc);
                for (std::size_t k = 0; k < patch_len; ++k) {
                    const T pk = patch[k];
                    const T* wrow = w + k * co;
                    for (std::size_t o = 0; o < co; ++o) acc[o] += pk * wrow[o];
                }
            }
        }
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

    const T* in = input.raw();
    const T* w = weights.raw();
    const T* go = grad_out.raw();
    const std::size_t positions = n * g.out_h * g.out_w;

    // Bias: column sums of grad_out in position order.
    T* gb = grads.bias.raw();
    for (std::size_t p = 0; p < positions; ++p)
        for (std::size_t o = 0; o < co; ++o) gb[o] += go[p * co + o];

    // Weights: one weight row (kernel tap, input channel) per task.
    T* gw = grads.weights.raw();
    const auto taps = static_cast<std::ptrdiff_t>(kKernelSize * kKernelSize * ci);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < taps; ++k) {
        const std::size_t i = static_cast<std::size_t>(k) % ci;
        const std::size_t tap = static_cast<std::size_t>(k) / ci;
        const std::size_t dy = tap / kKernelSize, dx = tap % kKernelSize;
        T* row = gw + k * co;
        for (std::size_t b = 0; b < n; ++b) {
            const T* img = in + b * g.in_h * g.in_w * ci;
            for (std::size_t oy = 0; oy < g.out_h; ++oy) {
                const auto y = source_index(oy, dy, stride, g.pad_top, g.in_h);
                if (y < 0) continue;
                for (std::size_t ox = 0; ox < g.out_w; ++ox) {
                    const auto x = source_index(ox, dx, stride, g.pad_left, g.in_w);
                    if (x < 0) continue;
                    const T v = img[(static_cast<std::size_t>(y) * g.in_w + x) * ci + i];
                    const T* grow = go + ((b * g.out_h + oy) * g.out_w + ox) * co;
                    for (std::size_t o = 0; o < co; ++o) row[o] += v * grow[o];
                }
            }
        }
    }

    // Input: gather every output position that read (y, x).
    T* gi = grads.input.raw();
    const auto rows = static_cast<std::ptrdiff_t>(n * g.in_h);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
        const std::size_t b = static_cast<std::size_t>(r) / g.in_h;
        const std::size_t y = static_cast<std::size_t>(r) % g.in_h;
        for (std::size_t x = 0; x < g.in_w; ++x) {
            T* cell = gi + ((b * g.in_h + y) * g.in_w + x) * ci;
            for (std::size_t dy = 0; dy < kKernelSize; ++dy) {
                const std::size_t ty = y + g.pad_top;
                if (ty < dy || (ty - dy) % stride != 0) continue;
                const std::size_t oy = (ty - dy) / stride;
                if (oy >= g.out_h) continue;
                for (std::size_t dx = 0; dx < kKernelSize; ++dx) {
                    const std::size_t tx = x + g.pad_left;
                    if (tx < dx || (tx - dx) % stride != 0) continue;
                    const std::size_t ox = (tx - dx) / stride;
                    if (ox >= g.out_w) continue;
                    const T* grow = go + ((b * g.out_h + oy) * g.out_w + ox) * co;
                    const T* wtap = w + (dy * kKernelSize + dx) * ci * co;
                    for (std::size_t i = 0; i < ci; ++i) {
                        T acc = 0;
                        const T* wrow = wtap + i * co;
                        for (std::size_t o = 0; o < co; ++o) acc += grow[o] * wrow[o];
                        cell[i] += acc;
                    }
                }
            }
        }
    }
    return grads;
}

template Tensor<float> conv2d_forward(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&, std::size_t);
template Tensor<double> conv2d_forward(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&, std::size_t);
template ConvGrads<float> conv2d_backward(const Tensor<float>&, const Tensor<float>&, std::size_t, const Tensor<float>&);
template ConvGrads<double> conv2d_backward(const Tensor<double>&, const Tensor<double>&, std::size_t, const Tensor<double>&);

}  // namespace expc::parallel
