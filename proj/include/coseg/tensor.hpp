#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace coseg {

// Dense row-major tensor, rank 1..4. Channel-first layout everywhere:
// rank-3 is [C,H,W], rank-4 is [C,H,W,D] with depth as the last (contiguous
// along D for rank-4, along W for rank-3).
template <typename T>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape, T fill = T(0))
        : shape_(std::move(shape)) {
        for (int s : shape_)
            if (s < 1) throw std::invalid_argument("Tensor: all dimensions must be >= 1");
        data_.assign(numel_of(shape_), fill);
    }

    static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

    int rank() const { return static_cast<int>(shape_.size()); }
    const std::vector<int>& shape() const { return shape_; }
    int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    // [C,H,W]
    T& at3(int c, int h, int w) {
        return data_[(static_cast<std::size_t>(c) * shape_[1] + h) * shape_[2] + w];
    }
    const T& at3(int c, int h, int w) const {
        return data_[(static_cast<std::size_t>(c) * shape_[1] + h) * shape_[2] + w];
    }

    // [C,H,W,D]
    T& at4(int c, int h, int w, int d) {
        return data_[((static_cast<std::size_t>(c) * shape_[1] + h) * shape_[2] + w) * shape_[3] + d];
    }
    const T& at4(int c, int h, int w, int d) const {
        return data_[((static_cast<std::size_t>(c) * shape_[1] + h) * shape_[2] + w) * shape_[3] + d];
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    bool all_finite() const {
        for (const T& v : data_)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(shape_);
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
        return out;
    }

    static std::size_t numel_of(const std::vector<int>& shape) {
        std::size_t n = 1;
        for (int s : shape) n *= static_cast<std::size_t>(s);
        return n;
    }

    // Spatial voxel count: everything except the leading (channel) axis.
    std::size_t spatial_size() const {
        std::size_t n = 1;
        for (std::size_t i = 1; i < shape_.size(); ++i) n *= static_cast<std::size_t>(shape_[i]);
        return n;
    }

private:
    std::vector<int> shape_;
    std::vector<T> data_;
};

inline std::string shape_str(const std::vector<int>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        out += std::to_string(s[i]);
        if (i + 1 < s.size()) out += ",";
    }
    return out + "]";
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(what) + ": shape mismatch " + shape_str(a.shape()) +
                                    " vs " + shape_str(b.shape()));
}

}  // namespace coseg
