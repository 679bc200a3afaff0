#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "expc/error.hpp"

namespace expc {

/// Extents of a dense tensor, rank 1 to 4. Image tensors are
/// (batch, height, width, channels) with channels varying fastest.
class Shape {
public:
    Shape() = default;
    Shape(std::initializer_list<std::size_t> dims);
    explicit Shape(std::vector<std::size_t> dims);

    std::size_t rank() const noexcept { return dims_.size(); }
    std::size_t operator[](std::size_t axis) const { return dims_.at(axis); }
    std::size_t count() const noexcept;
    const std::vector<std::size_t>& dims() const noexcept { return dims_; }

    std::string to_string() const;

    friend bool operator==(const Shape&, const Shape&) = default;

private:
    std::vector<std::size_t> dims_;
};

/// Dense row-major array. Value semantic: every operation below returns a
/// new tensor and leaves its arguments untouched.
template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;
    explicit Tensor(Shape shape, T fill = T(0)) : shape_(std::move(shape)), data_(shape_.count(), fill) {}
    Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != shape_.count())
            throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_.to_string());
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_[axis]; }
    std::size_t rank() const noexcept { return shape_.rank(); }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }
    T* raw() noexcept { return data_.data(); }
    const T* raw() const noexcept { return data_.data(); }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    // 2-D and 4-D element access, row-major.
    T& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    const T& at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
    T& at(std::size_t n, std::size_t y, std::size_t x, std::size_t c) {
        return data_[((n * shape_[1] + y) * shape_[2] + x) * shape_[3] + c];
    }
    const T& at(std::size_t n, std::size_t y, std::size_t x, std::size_t c) const {
        return data_[((n * shape_[1] + y) * shape_[2] + x) * shape_[3] + c];
    }

    bool all_finite() const noexcept {
        for (T v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    template <typename U>
    Tensor<U> cast() const {
        return Tensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<T> data_;
};

template <typename T>
Tensor<T> reshape(const Tensor<T>& t, const Shape& s);

/// Applies `f` to every element; throws NumericError if `f` yields NaN/Inf.
template <typename T>
Tensor<T> map_elementwise(const Tensor<T>& t, const std::function<T(T)>& f);

/// (m,k) x (k,n) -> (m,n). Rows of the result are computed in parallel.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

/// Transpose of a rank-2 tensor.
template <typename T>
Tensor<T> transpose(const Tensor<T>& a);

/// (n,h,w,c) -> (n,c), mean over the spatial positions of every channel.
template <typename T>
Tensor<T> spatial_mean(const Tensor<T>& t);

}  // namespace expc
