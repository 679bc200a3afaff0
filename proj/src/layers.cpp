#include "expc/layers.hpp"

#include <algorithm>
#include <cmath>

namespace expc {

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const LayerParams<T>& layer) {
    return parallel::conv2d_forward(input, layer.weights, layer.bias, layer.stride);
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const LayerParams<T>& layer, const Tensor<T>& grad_out) {
    return parallel::conv2d_backward(input, layer.weights, layer.stride, grad_out);
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& t) {
    Tensor<T> out(t.shape());
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = t[i] > T(0) ? t[i] : T(0);
    return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& t, const Tensor<T>& grad_out) {
    if (t.shape() != grad_out.shape())
        throw ShapeError("relu_backward: " + t.shape().to_string() + " vs " + grad_out.shape().to_string());
    Tensor<T> out(t.shape());
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = t[i] > T(0) ? grad_out[i] : T(0);
    return out;
}

template <typename T>
Tensor<T> global_avg_pool_forward(const Tensor<T>& t) {
    return spatial_mean(t);
}

template <typename T>
Tensor<T> global_avg_pool_backward(const Shape& input_shape, const Tensor<T>& grad_out) {
    if (input_shape.rank() != 4 || grad_out.shape() != Shape{input_shape[0], input_shape[3]})
        throw ShapeError("global_avg_pool_backward: grad " + grad_out.shape().to_string() +
                         " does not match input " + input_shape.to_string());
    const std::size_t n = input_shape[0], hw = input_shape[1] * input_shape[2], c = input_shape[3];
    const T scale = T(1) / static_cast<T>(hw);
    Tensor<T> out(input_shape);
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t p = 0; p < hw; ++p)
            for (std::size_t ch = 0; ch < c; ++ch) out[(b * hw + p) * c + ch] = grad_out[b * c + ch] * scale;
    return out;
}

namespace {

template <typename T>
void check_dense(const Tensor<T>& x, const LayerParams<T>& layer) {
    if (x.rank() != 2 || layer.weights.rank() != 2 || x.dim(1) != layer.weights.dim(0))
        throw ShapeError("dense: input " + x.shape().to_string() + " vs weights " +
                         layer.weights.shape().to_string());
    if (layer.bias.rank() != 1 || layer.bias.dim(0) != layer.weights.dim(1))
        throw ShapeError("dense: bias " + layer.bias.shape().to_string() + " vs weights " +
                         layer.weights.shape().to_string());
}

}  // namespace

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const LayerParams<T>& layer) {
    check_dense(x, layer);
    Tensor<T> y = matmul(x, layer.weights);
    const std::size_t n = y.dim(0), m = y.dim(1);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < m; ++j) y[r * m + j] += layer.bias[j];
    return y;
}

template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& x, const LayerParams<T>& layer, const Tensor<T>& grad_out) {
    check_dense(x, layer);
    if (grad_out.shape() != Shape{x.dim(0), layer.weights.dim(1)})
        throw ShapeError("dense_backward: grad " + grad_out.shape().to_string());
    DenseGrads<T> g;
    g.input = matmul(grad_out, transpose(layer.weights));
    g.weights = matmul(transpose(x), grad_out);
    const std::size_t n = grad_out.dim(0), m = grad_out.dim(1);
    g.bias = Tensor<T>(Shape{m});
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < m; ++j) g.bias[j] += grad_out[r * m + j];
    return g;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
    if (logits.rank() != 2 || logits.dim(1) < 2)
        throw ShapeError("softmax needs (n,k>=2), got " + logits.shape().to_string());
    const std::size_t n = logits.dim(0), k = logits.dim(1);
    Tensor<T> out(logits.shape());
    for (std::size_t r = 0; r < n; ++r) {
        const T* in = logits.raw() + r * k;
        T* p = out.raw() + r * k;
        const T top = *std::max_element(in, in + k);
        T sum = 0;
        for (std::size_t j = 0; j < k; ++j) sum += (p[j] = std::exp(in[j] - top));
        for (std::size_t j = 0; j < k; ++j) p[j] /= sum;
    }
    return out;
}

#define EXPC_INSTANTIATE(T)                                                                          \
    template Tensor<T> conv2d_forward(const Tensor<T>&, const LayerParams<T>&);                       \
    template ConvGrads<T> conv2d_backward(const Tensor<T>&, const LayerParams<T>&, const Tensor<T>&); \
    template Tensor<T> relu_forward(const Tensor<T>&);                                                \
    template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);                             \
    template Tensor<T> global_avg_pool_forward(const Tensor<T>&);                                     \
    template Tensor<T> global_avg_pool_backward(const Shape&, const Tensor<T>&);                      \
    template Tensor<T> dense_forward(const Tensor<T>&, const LayerParams<T>&);                        \
    template DenseGrads<T> dense_backward(const Tensor<T>&, const LayerParams<T>&, const Tensor<T>&); \
    template Tensor<T> softmax(const Tensor<T>&);

EXPC_INSTANTIATE(float)
EXPC_INSTANTIATE(double)

#undef EXPC_INSTANTIATE

}  // namespace expc
