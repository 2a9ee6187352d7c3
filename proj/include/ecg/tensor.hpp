#pragma once

#include "ecg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace ecg {

/// Dense row-major array of rank 1 to 3. Activations are (batch, channels,
/// length) or (batch, features); parameters use the same container.
template <typename T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() = default;

    explicit BasicTensor(std::vector<std::size_t> shape, T fill = T{0})
        : shape_(std::move(shape)) {
        check_rank();
        data_.assign(count(shape_), fill);
    }

    BasicTensor(std::vector<std::size_t> shape, std::vector<T> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        check_rank();
        if (data_.size() != count(shape_))
            throw ShapeError("tensor data has " + std::to_string(data_.size()) +
                             " values but shape " + shape_string() + " needs " +
                             std::to_string(count(shape_)));
    }

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }
    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }

    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    T& at(std::size_t b, std::size_t c, std::size_t l) noexcept {
        return data_[(b * shape_[1] + c) * shape_[2] + l];
    }
    const T& at(std::size_t b, std::size_t c, std::size_t l) const noexcept {
        return data_[(b * shape_[1] + c) * shape_[2] + l];
    }

    /// Same data, new shape with an equal element count.
    BasicTensor reshaped(std::vector<std::size_t> shape) const {
        return BasicTensor(std::move(shape), data_);
    }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
    }

    std::string shape_string() const {
        std::string s = "(";
        for (std::size_t i = 0; i < shape_.size(); ++i)
            s += (i ? ", " : "") + std::to_string(shape_[i]);
        return s + ")";
    }

    friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

private:
    static std::size_t count(const std::vector<std::size_t>& shape) {
        return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    }
    void check_rank() const {
        if (shape_.empty() || shape_.size() > 3)
            throw ShapeError("tensor rank must be 1..3, got " + std::to_string(shape_.size()));
    }

    std::vector<std::size_t> shape_;
    std::vector<T> data_;
};

using Tensor = BasicTensor<float>;

template <typename To, typename From>
BasicTensor<To> tensor_cast(const BasicTensor<From>& t) {
    std::vector<To> data(t.size());
    std::transform(t.values().begin(), t.values().end(), data.begin(),
                   [](From v) { return static_cast<To>(v); });
    return BasicTensor<To>(t.shape(), std::move(data));
}

} // namespace ecg
