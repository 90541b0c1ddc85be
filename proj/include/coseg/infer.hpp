#pragma once

#include <array>
#include <vector>

#include "coseg/core.hpp"
#include "coseg/model.hpp"

namespace coseg {

// Half-overlap tiling: stride = patch/2 per axis (min 1), final window per
// axis clamped flush to the boundary. Every voxel is covered by >= 1 window.
struct TilingPlan {
    std::array<int, 3> patch{0, 0, 0};
    std::array<int, 3> stride{0, 0, 0};
    std::vector<std::array<int, 3>> offsets;
};

TilingPlan make_tiling_plan(std::array<int, 3> vol_shape, std::array<int, 3> patch);

// Per-voxel coverage count over the plan's windows.
Tensor<int> tiling_weight_map(std::array<int, 3> vol_shape, const TilingPlan& plan);

// Softmax predictions of each window accumulated with weight 1, divided by
// per-voxel counts. Accumulation at 64-bit, so window order cannot change
// the result. No augmentation; RNG-free.
SoftMask sliding_window_3d(const SegNet3D<float>& model, const Volume& v, const TilingPlan& plan);

// Slice-wise 2D prediction assembled over depth (full-resolution slices).
SoftMask infer_2d_volume(const SegNet2D<float>& model, const Volume& v);

// Per-voxel argmax; ties break toward the lowest class index.
Tensor<int> harden(const SoftMask& mask);

}  // namespace coseg
