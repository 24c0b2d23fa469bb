#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "texfv/errors.hpp"

namespace texfv {

/// N-dimensional dense array of 32-bit floats, row-major.
/// The numeric substrate for images, feature maps and matrices.
class DenseArray {
  public:
    DenseArray() = default;

    explicit DenseArray(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), data_(count(shape_), 0.0f) {}

    DenseArray(std::vector<std::size_t> shape, std::vector<float> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (count(shape_) != data_.size())
            throw DimensionError("DenseArray: shape/data length mismatch");
    }

    static DenseArray full(std::vector<std::size_t> shape, float value) {
        DenseArray a(std::move(shape));
        for (auto& v : a.data_) v = value;
        return a;
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_[axis]; }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::vector<float>& values() { return data_; }
    const std::vector<float>& values() const { return data_; }

    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }

    // Rank-specific accessors; callers keep the rank straight.
    float& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    float at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

    float& at(std::size_t c, std::size_t h, std::size_t w) {
        return data_[(c * shape_[1] + h) * shape_[2] + w];
    }
    float at(std::size_t c, std::size_t h, std::size_t w) const {
        return data_[(c * shape_[1] + h) * shape_[2] + w];
    }

    float& at(std::size_t k, std::size_t c, std::size_t h, std::size_t w) {
        return data_[((k * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }
    float at(std::size_t k, std::size_t c, std::size_t h, std::size_t w) const {
        return data_[((k * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }

    bool same_shape(const DenseArray& other) const { return shape_ == other.shape_; }

    static std::size_t count(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (auto e : shape) n *= e;
        return shape.empty() ? 0 : n;
    }

  private:
    std::vector<std::size_t> shape_;
    std::vector<float> data_;
};

}  // namespace texfv
