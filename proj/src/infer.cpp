#include "coseg/infer.hpp"

#include <algorithm>

namespace coseg {

namespace {

std::vector<int> axis_offsets(int dim, int patch, int stride) {
    std::vector<int> offs;
    for (int o = 0; o + patch <= dim; o += stride) offs.push_back(o);
    const int last = dim - patch;
    if (offs.empty() || offs.back() != last) offs.push_back(last);
    return offs;
}

}  // namespace

TilingPlan make_tiling_plan(std::array<int, 3> vol_shape, std::array<int, 3> patch) {
    TilingPlan plan;
    plan.patch = patch;
    for (int ax = 0; ax < 3; ++ax) {
        if (patch[ax] < 1 || patch[ax] > vol_shape[ax])
            throw std::invalid_argument("make_tiling_plan: patch must satisfy 1 <= patch <= volume (axis " +
                                        std::to_string(ax) + ")");
        plan.stride[ax] = std::max(1, patch[ax] / 2);
    }
    const auto oh = axis_offsets(vol_shape[0], patch[0], plan.stride[0]);
    const auto ow = axis_offsets(vol_shape[1], patch[1], plan.stride[1]);
    const auto od = axis_offsets(vol_shape[2], patch[2], plan.stride[2]);
    for (int h : oh)
        for (int w : ow)
            for (int d : od) plan.offsets.push_back({h, w, d});
    return plan;
}

Tensor<int> tiling_weight_map(std::array<int, 3> vol_shape, const TilingPlan& plan) {
    Tensor<int> counts({vol_shape[0], vol_shape[1], vol_shape[2]}, 0);
    for (const auto& off : plan.offsets)
        for (int h = 0; h < plan.patch[0]; ++h)
            for (int w = 0; w < plan.patch[1]; ++w)
                for (int d = 0; d < plan.patch[2]; ++d)
                    ++counts[(static_cast<std::size_t>(off[0] + h) * vol_shape[1] + (off[1] + w)) *
                                 vol_shape[2] +
                             (off[2] + d)];
    return counts;
}

SoftMask sliding_window_3d(const SegNet3D<float>& model, const Volume& v, const TilingPlan& plan) {
    const int H = v.height(), W = v.width(), D = v.depth();
    const int C = model.num_classes();
    const std::size_t nvox = static_cast<std::size_t>(H) * W * D;

    std::vector<double> acc(static_cast<std::size_t>(C) * nvox, 0.0);
    std::vector<int> counts(nvox, 0);

    for (const auto& off : plan.offsets) {
        Tensor<float> patch({v.channels(), plan.patch[0], plan.patch[1], plan.patch[2]});
        for (int c = 0; c < v.channels(); ++c)
            for (int h = 0; h < plan.patch[0]; ++h)
                for (int w = 0; w < plan.patch[1]; ++w)
                    for (int d = 0; d < plan.patch[2]; ++d)
                        patch.at4(c, h, w, d) = v.data.at4(c, off[0] + h, off[1] + w, off[2] + d);
        const Tensor<float> probs = nn::softmax_classes(model.forward(patch, nullptr));
        for (int c = 0; c < C; ++c)
            for (int h = 0; h < plan.patch[0]; ++h)
                for (int w = 0; w < plan.patch[1]; ++w)
                    for (int d = 0; d < plan.patch[2]; ++d) {
                        const std::size_t vi =
                            (static_cast<std::size_t>(off[0] + h) * W + (off[1] + w)) * D + (off[2] + d);
                        acc[static_cast<std::size_t>(c) * nvox + vi] += probs.at4(c, h, w, d);
                        if (c == 0) ++counts[vi];
                    }
    }

    Tensor<float> out({C, H, W, D});
    for (int c = 0; c < C; ++c)
        for (std::size_t vi = 0; vi < nvox; ++vi)
            out[static_cast<std::size_t>(c) * nvox + vi] =
                static_cast<float>(acc[static_cast<std::size_t>(c) * nvox + vi] / counts[vi]);
    return SoftMask(std::move(out));
}

SoftMask infer_2d_volume(const SegNet2D<float>& model, const Volume& v) {
    if (v.channels() != model.in_channels())
        throw std::invalid_argument("infer_2d_volume: channel mismatch");
    return predict_mask_2d_volume(model, v);
}

Tensor<int> harden(const SoftMask& mask) { return argmax_classes(mask.data); }

}  // namespace coseg
