#include "expc/tensor.hpp"

#include <sstream>

namespace expc {

Shape::Shape(std::initializer_list<std::size_t> dims) : Shape(std::vector<std::size_t>(dims)) {}

Shape::Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    if (dims_.empty() || dims_.size() > 4)
        throw ShapeError("tensor rank must be 1..4, got " + std::to_string(dims_.size()));
    for (std::size_t d : dims_)
        if (d == 0) throw ShapeError("zero extent in shape " + to_string());
}

std::size_t Shape::count() const noexcept {
    if (dims_.empty()) return 0;
    std::size_t n = 1;
    for (std::size_t d : dims_) n *= d;
    return n;
}

std::string Shape::to_string() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < dims_.size(); ++i) os << (i ? "," : "") << dims_[i];
    os << ')';
    return os.str();
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& t, const Shape& s) {
    if (s.count() != t.size())
        throw ShapeError("cannot reshape " + t.shape().to_string() + " to " + s.to_string());
    return Tensor<T>(s, std::vector<T>(t.data().begin(), t.data().end()));
}

template <typename T>
Tensor<T> map_elementwise(const Tensor<T>& t, const std::function<T(T)>& f) {
    Tensor<T> out(t.shape());
    for (std::size_t i = 0; i < t.size(); ++i) {
        T v = f(t[i]);
        if (!std::isfinite(v))
            throw NumericError("non-finite value produced at element " + std::to_string(i));
        out[i] = v;
    }
    return out;
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
        throw ShapeError("matmul mismatch " + a.shape().to_string() + " x " + b.shape().to_string());
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor<T> out(Shape{m, n});
    const T* pa = a.raw();
    const T* pb = b.raw();
    T* po = out.raw();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
        T* row = po + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const T av = pa[i * k + p];
            const T* brow = pb + p * n;
            for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
        }
    }
    return out;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
    if (a.rank() != 2) throw ShapeError("transpose needs rank 2, got " + a.shape().to_string());
    const std::size_t r = a.dim(0), c = a.dim(1);
    Tensor<T> out(Shape{c, r});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j * r + i] = a[i * c + j];
    return out;
}

template <typename T>
Tensor<T> spatial_mean(const Tensor<T>& t) {
    if (t.rank() != 4) throw ShapeError("spatial_mean needs rank 4, got " + t.shape().to_string());
    const std::size_t n = t.dim(0), hw = t.dim(1) * t.dim(2), c = t.dim(3);
    Tensor<T> out(Shape{n, c});
    for (std::size_t b = 0; b < n; ++b) {
        const T* src = t.raw() + b * hw * c;
        T* dst = out.raw() + b * c;
        for (std::size_t p = 0; p < hw; ++p)
            for (std::size_t ch = 0; ch < c; ++ch) dst[ch] += src[p * c + ch];
        for (std::size_t ch = 0; ch < c; ++ch) dst[ch] /= static_cast<T>(hw);
    }
    return out;
}

#define EXPC_INSTANTIATE(T)                                                       \
    template Tensor<T> reshape(const Tensor<T>&, const Shape&);                   \
    template Tensor<T> map_elementwise(const Tensor<T>&, const std::function<T(T)>&); \
    template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                \
    template Tensor<T> transpose(const Tensor<T>&);                               \
    template Tensor<T> spatial_mean(const Tensor<T>&);

EXPC_INSTANTIATE(float)
EXPC_INSTANTIATE(double)

#undef EXPC_INSTANTIATE

}  // namespace expc
