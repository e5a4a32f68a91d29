#pragma once

#include "fxlab/error.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace fxlab {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& s);

// Dense row-major array with an optional same-shape gradient slot. Storage is
// aligned to the widest vector width so vectorized reductions do not depend on
// where the allocator put the buffer.
template <typename T>
class BasicTensor {
public:
    using Storage = std::vector<T, Eigen::aligned_allocator<T>>;

    BasicTensor() = default;
    explicit BasicTensor(Shape shape, T fill = T(0)) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}
    BasicTensor(Shape shape, const std::vector<T>& data) : shape_(std::move(shape)), data_(data.begin(), data.end()) {
        if (data_.size() != shape_size(shape_))
            throw Error(ErrorKind::Shape, "data length " + std::to_string(data_.size()) + " does not match shape " +
                                              shape_string(shape_));
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }
    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    bool has_grad() const noexcept { return !grad_.empty(); }
    std::span<T> grad() noexcept { return grad_; }
    std::span<const T> grad() const noexcept { return grad_; }
    void zero_grad() { grad_.assign(data_.size(), T(0)); }
    void drop_grad() { grad_.clear(); }

    void reshape(Shape shape) {
        if (shape_size(shape) != data_.size())
            throw Error(ErrorKind::Shape, "cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
        shape_ = std::move(shape);
    }

private:
    Shape shape_;
    Storage data_;
    Storage grad_;
};

using Tensor = BasicTensor<float>;

}  // namespace fxlab
