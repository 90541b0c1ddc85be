#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "coseg/tensor.hpp"

namespace coseg {

// Image volume: rank-4 [C,H,W,D], depth always last. Spacing is metadata
// (mm per voxel) and never affects computation unless metrics are switched
// to mm units.
struct Volume {
    Tensor<float> data;
    std::array<float, 3> spacing{1.f, 1.f, 1.f};

    Volume() = default;
    explicit Volume(Tensor<float> t, std::array<float, 3> sp = {1.f, 1.f, 1.f})
        : data(std::move(t)), spacing(sp) {
        validate();
    }

    int channels() const { return data.dim(0); }
    int height() const { return data.dim(1); }
    int width() const { return data.dim(2); }
    int depth() const { return data.dim(3); }

    void validate() const {
        if (data.rank() != 4) throw std::invalid_argument("Volume: data must be rank-4 [C,H,W,D]");
        if (!data.all_finite()) throw std::invalid_argument("Volume: non-finite values");
    }
};

// Per-voxel class-probability field, rank-4 [C_c,H,W,D]. Every voxel's class
// vector lies on the probability simplex.
struct SoftMask {
    Tensor<float> data;

    SoftMask() = default;
    explicit SoftMask(Tensor<float> t) : data(std::move(t)) {
        if (data.rank() != 4) throw std::invalid_argument("SoftMask: data must be rank-4 [C,H,W,D]");
    }

    int classes() const { return data.dim(0); }
    int height() const { return data.dim(1); }
    int width() const { return data.dim(2); }
    int depth() const { return data.dim(3); }

    // Simplex invariant: entries in [0,1], per-voxel sum within tol of 1.
    void validate(float tol = 1e-5f) const {
        const int C = data.dim(0);
        const std::size_t nvox = data.spatial_size();
        const float* p = data.data();
        for (std::size_t v = 0; v < nvox; ++v) {
            float sum = 0.f;
            for (int c = 0; c < C; ++c) {
                const float x = p[static_cast<std::size_t>(c) * nvox + v];
                if (!(x >= -1e-6f && x <= 1.f + 1e-6f))
                    throw std::invalid_argument("SoftMask: entry outside [0,1]");
                sum += x;
            }
            if (std::fabs(sum - 1.f) > tol)
                throw std::invalid_argument("SoftMask: voxel class vector does not sum to 1");
        }
    }
};

// Single 2D slice, rank-3 [C,H,W].
struct Slice {
    Tensor<float> data;

    Slice() = default;
    explicit Slice(Tensor<float> t) : data(std::move(t)) {
        if (data.rank() != 3) throw std::invalid_argument("Slice: data must be rank-3 [C,H,W]");
        if (!data.all_finite()) throw std::invalid_argument("Slice: non-finite values");
    }
};

// --- slice/volume conversion -------------------------------------------------

// slices[d] == v[:,:,:,d]; ascending depth order.
template <typename T>
std::vector<Tensor<T>> extract_slices_t(const Tensor<T>& v) {
    if (v.rank() != 4) throw std::invalid_argument("extract_slices: rank-4 tensor required");
    const int C = v.dim(0), H = v.dim(1), W = v.dim(2), D = v.dim(3);
    std::vector<Tensor<T>> out;
    out.reserve(static_cast<std::size_t>(D));
    for (int d = 0; d < D; ++d) {
        Tensor<T> s({C, H, W});
        for (int c = 0; c < C; ++c)
            for (int h = 0; h < H; ++h)
                for (int w = 0; w < W; ++w) s.at3(c, h, w) = v.at4(c, h, w, d);
        out.push_back(std::move(s));
    }
    return out;
}

inline std::vector<Slice> extract_slices(const Volume& v) {
    std::vector<Slice> out;
    for (auto& t : extract_slices_t(v.data)) out.emplace_back(std::move(t));
    return out;
}

// Stack rank-3 [C,H,W] tensors into [C,H,W,D]; inverse of extract_slices.
template <typename T>
Tensor<T> concat_depth(const std::vector<Tensor<T>>& slices) {
    if (slices.empty()) throw std::invalid_argument("concat_depth: empty slice list");
    const auto& s0 = slices.front();
    if (s0.rank() != 3) throw std::invalid_argument("concat_depth: rank-3 slices required");
    const int C = s0.dim(0), H = s0.dim(1), W = s0.dim(2);
    const int D = static_cast<int>(slices.size());
    for (const auto& s : slices)
        if (s.shape() != s0.shape())
            throw std::invalid_argument("concat_depth: slice shape mismatch " + shape_str(s.shape()) +
                                        " vs " + shape_str(s0.shape()));
    Tensor<T> out({C, H, W, D});
    for (int d = 0; d < D; ++d)
        for (int c = 0; c < C; ++c)
            for (int h = 0; h < H; ++h)
                for (int w = 0; w < W; ++w) out.at4(c, h, w, d) = slices[static_cast<std::size_t>(d)].at3(c, h, w);
    return out;
}

// --- label encoding ----------------------------------------------------------

// labels: rank-3 [H,W,D] integers in [0, classes). Output channel c is the
// indicator of label==c; argmax recovers the input exactly.
inline SoftMask one_hot(const Tensor<int>& labels, int classes) {
    if (labels.rank() != 3) throw std::invalid_argument("one_hot: rank-3 [H,W,D] labels required");
    if (classes < 1) throw std::invalid_argument("one_hot: classes must be >= 1");
    const int H = labels.dim(0), W = labels.dim(1), D = labels.dim(2);
    Tensor<float> out({classes, H, W, D}, 0.f);
    const std::size_t nvox = labels.size();
    for (std::size_t v = 0; v < nvox; ++v) {
        const int l = labels[v];
        if (l < 0 || l >= classes)
            throw std::out_of_range("one_hot: label " + std::to_string(l) + " outside [0," +
                                    std::to_string(classes) + ")");
        out[static_cast<std::size_t>(l) * nvox + v] = 1.f;
    }
    return SoftMask(std::move(out));
}

// Per-voxel argmax over the class axis; ties break toward the lowest index.
template <typename T>
Tensor<int> argmax_classes(const Tensor<T>& m) {
    if (m.rank() < 2) throw std::invalid_argument("argmax_classes: class axis required");
    const int C = m.dim(0);
    const std::size_t nvox = m.spatial_size();
    std::vector<int> sp(m.shape().begin() + 1, m.shape().end());
    Tensor<int> out(sp, 0);
    const T* p = m.data();
    for (std::size_t v = 0; v < nvox; ++v) {
        int best = 0;
        T bestval = p[v];
        for (int c = 1; c < C; ++c) {
            const T x = p[static_cast<std::size_t>(c) * nvox + v];
            if (x > bestval) {
                bestval = x;
                best = c;
            }
        }
        out[v] = best;
    }
    return out;
}

// --- intensity normalization ---------------------------------------------------

// Z-score over all voxels (all channels pooled). Constant input maps to zeros.
inline Tensor<float> standardize(const Tensor<float>& t) {
    const std::size_t n = t.size();
    if (n == 0) return t;
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += t[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = t[i] - mean;
        var += d * d;
    }
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);
    Tensor<float> out(t.shape());
    if (sd < 1e-12) {
        out.fill(0.f);
        return out;
    }
    for (std::size_t i = 0; i < n; ++i)
        out[i] = static_cast<float>((t[i] - mean) / sd);
    return out;
}

inline Volume standardize(const Volume& v) {
    Volume out;
    out.data = standardize(v.data);
    out.spacing = v.spacing;
    return out;
}

}  // namespace coseg
