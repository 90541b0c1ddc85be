#include "coseg/augment.hpp"

#include <algorithm>
#include <cmath>

namespace coseg {

void AugmentConfig::validate() const {
    if (scale_min > scale_max || gamma_min > gamma_max)
        throw std::invalid_argument("AugmentConfig: ranges must be well-ordered");
    if (scale_min <= 0 || gamma_min <= 0)
        throw std::invalid_argument("AugmentConfig: scale and gamma must be positive");
    for (int c : crop)
        if (c < 1) throw std::invalid_argument("AugmentConfig: crop dims must be >= 1");
    if (foreground_prob < 0 || foreground_prob > 1)
        throw std::invalid_argument("AugmentConfig: foreground_prob must be in [0,1]");
}

namespace {

// Align-corners source coordinate for output index i: i*(S-1)/(S'-1).
inline double src_coord(int i, int in_dim, int out_dim) {
    if (out_dim <= 1) return 0.0;
    return static_cast<double>(i) * (in_dim - 1) / static_cast<double>(out_dim - 1);
}

Tensor<float> trilinear_resize(const Tensor<float>& t, std::array<int, 3> out_dims) {
    const int C = t.dim(0), H = t.dim(1), W = t.dim(2), D = t.dim(3);
    const int Ho = out_dims[0], Wo = out_dims[1], Do = out_dims[2];
    Tensor<float> out({C, Ho, Wo, Do});
    for (int c = 0; c < C; ++c)
        for (int oh = 0; oh < Ho; ++oh) {
            const double fh = src_coord(oh, H, Ho);
            const int h0 = static_cast<int>(fh), h1 = std::min(h0 + 1, H - 1);
            const double ah = fh - h0;
            for (int ow = 0; ow < Wo; ++ow) {
                const double fw = src_coord(ow, W, Wo);
                const int w0 = static_cast<int>(fw), w1 = std::min(w0 + 1, W - 1);
                const double aw = fw - w0;
                for (int od = 0; od < Do; ++od) {
                    const double fd = src_coord(od, D, Do);
                    const int d0 = static_cast<int>(fd), d1 = std::min(d0 + 1, D - 1);
                    const double ad = fd - d0;
                    const double v000 = t.at4(c, h0, w0, d0), v001 = t.at4(c, h0, w0, d1);
                    const double v010 = t.at4(c, h0, w1, d0), v011 = t.at4(c, h0, w1, d1);
                    const double v100 = t.at4(c, h1, w0, d0), v101 = t.at4(c, h1, w0, d1);
                    const double v110 = t.at4(c, h1, w1, d0), v111 = t.at4(c, h1, w1, d1);
                    const double v00 = v000 + ad * (v001 - v000);
                    const double v01 = v010 + ad * (v011 - v010);
                    const double v10 = v100 + ad * (v101 - v100);
                    const double v11 = v110 + ad * (v111 - v110);
                    const double v0 = v00 + aw * (v01 - v00);
                    const double v1 = v10 + aw * (v11 - v10);
                    out.at4(c, oh, ow, od) = static_cast<float>(v0 + ah * (v1 - v0));
                }
            }
        }
    return out;
}

void renormalize_simplex(Tensor<float>& mask) {
    const int C = mask.dim(0);
    const std::size_t nvox = mask.spatial_size();
    float* p = mask.data();
    for (std::size_t v = 0; v < nvox; ++v) {
        float sum = 0.f;
        for (int c = 0; c < C; ++c) {
            float& x = p[static_cast<std::size_t>(c) * nvox + v];
            x = std::max(0.f, x);
            sum += x;
        }
        if (sum <= 0.f) {
            for (int c = 0; c < C; ++c) p[static_cast<std::size_t>(c) * nvox + v] = 1.f / C;
        } else {
            for (int c = 0; c < C; ++c) p[static_cast<std::size_t>(c) * nvox + v] /= sum;
        }
    }
}

void gamma_on_minmax(Tensor<float>& img, double gamma) {
    float mn = img[0], mx = img[0];
    for (std::size_t i = 0; i < img.size(); ++i) {
        mn = std::min(mn, img[i]);
        mx = std::max(mx, img[i]);
    }
    if (mx - mn > 1e-12f) {
        const double span = mx - mn;
        for (std::size_t i = 0; i < img.size(); ++i) {
            const double u = (img[i] - mn) / span;
            img[i] = static_cast<float>(mn + span * std::pow(u, gamma));
        }
    } else {
        // constant image: values are their own [0,1] representation
        for (std::size_t i = 0; i < img.size(); ++i) {
            const double u = std::clamp(static_cast<double>(img[i]), 0.0, 1.0);
            img[i] = static_cast<float>(std::pow(u, gamma));
        }
    }
}

}  // namespace

std::pair<Tensor<float>, Tensor<float>> apply_resize_gamma(const Tensor<float>& image,
                                                           const Tensor<float>& mask, double scale,
                                                           double gamma) {
    std::array<int, 3> out_dims{};
    for (int ax = 0; ax < 3; ++ax)
        out_dims[ax] = std::max(1, static_cast<int>(std::lround(scale * image.dim(ax + 1))));
    Tensor<float> img = trilinear_resize(image, out_dims);
    Tensor<float> msk = trilinear_resize(mask, out_dims);
    renormalize_simplex(msk);
    gamma_on_minmax(img, gamma);
    return {std::move(img), std::move(msk)};
}

std::pair<Volume, SoftMask> augment(const Volume& v, const SoftMask& m, const AugmentConfig& cfg,
                                    RngStream& rng, AugmentDraws* record) {
    cfg.validate();
    if (v.height() != m.height() || v.width() != m.width() || v.depth() != m.depth())
        throw std::invalid_argument("augment: image/mask spatial shapes differ");
    const double scale = rng.uniform(cfg.scale_min, cfg.scale_max);
    const double gamma = rng.uniform(cfg.gamma_min, cfg.gamma_max);
    if (record) {
        record->scale = scale;
        record->gamma = gamma;
    }
    auto [img, msk] = apply_resize_gamma(v.data, m.data, scale, gamma);
    Volume vo;
    vo.data = std::move(img);
    vo.spacing = v.spacing;
    return {std::move(vo), SoftMask(std::move(msk))};
}

std::array<int, 3> draw_crop_offset(const Tensor<float>& fg_bias_mask, std::array<int, 3> crop,
                                    double p_fg, RngStream& rng, AugmentDraws* record) {
    const int H = fg_bias_mask.dim(1), W = fg_bias_mask.dim(2), D = fg_bias_mask.dim(3);
    const std::array<int, 3> dims{H, W, D};
    for (int ax = 0; ax < 3; ++ax)
        if (crop[ax] > dims[ax])
            throw std::invalid_argument("draw_crop_offset: crop exceeds volume along axis " +
                                        std::to_string(ax));

    const bool try_fg = rng.bernoulli(p_fg);
    std::array<int, 3> offset{};
    bool fg_used = false;
    if (try_fg) {
        // foreground probability = 1 - P(background); for C==1 treat the
        // single channel as foreground probability directly
        const int C = fg_bias_mask.dim(0);
        const std::size_t nvox = static_cast<std::size_t>(H) * W * D;
        std::vector<std::size_t> fg_voxels;
        const float* bg = fg_bias_mask.data();
        for (std::size_t v = 0; v < nvox; ++v) {
            const float p_fg_voxel = (C > 1) ? (1.f - bg[v]) : bg[v];
            if (p_fg_voxel > 0.5f) fg_voxels.push_back(v);
        }
        if (!fg_voxels.empty()) {
            const std::size_t pick =
                fg_voxels[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(fg_voxels.size())))];
            const int h = static_cast<int>(pick / (static_cast<std::size_t>(W) * D));
            const int w = static_cast<int>((pick / D) % static_cast<std::size_t>(W));
            const int d = static_cast<int>(pick % static_cast<std::size_t>(D));
            const std::array<int, 3> center{h, w, d};
            for (int ax = 0; ax < 3; ++ax)
                offset[ax] = std::clamp(center[ax] - crop[ax] / 2, 0, dims[ax] - crop[ax]);
            fg_used = true;
        }
    }
    if (!fg_used)
        for (int ax = 0; ax < 3; ++ax) offset[ax] = rng.uniform_int(dims[ax] - crop[ax] + 1);
    if (record) {
        record->fg_biased = fg_used;
        record->offset = offset;
    }
    return offset;
}

Tensor<float> crop_tensor(const Tensor<float>& t, std::array<int, 3> offset, std::array<int, 3> crop) {
    const int C = t.dim(0);
    Tensor<float> out({C, crop[0], crop[1], crop[2]});
    for (int c = 0; c < C; ++c)
        for (int h = 0; h < crop[0]; ++h)
            for (int w = 0; w < crop[1]; ++w)
                for (int d = 0; d < crop[2]; ++d)
                    out.at4(c, h, w, d) = t.at4(c, offset[0] + h, offset[1] + w, offset[2] + d);
    return out;
}

std::pair<Tensor<float>, Tensor<float>> crop_foreground_biased(const Tensor<float>& image,
                                                               const Tensor<float>& mask,
                                                               std::array<int, 3> crop, double p_fg,
                                                               RngStream& rng, AugmentDraws* record) {
    const auto offset = draw_crop_offset(mask, crop, p_fg, rng, record);
    return {crop_tensor(image, offset, crop), crop_tensor(mask, offset, crop)};
}

nlohmann::json ItemProvenance::to_json() const {
    return {{"volume_id", volume_id}, {"labeled", labeled},          {"scale", draws.scale},
            {"gamma", draws.gamma},   {"fg_biased", draws.fg_biased}, {"offset", draws.offset}};
}

TrainingBatch assemble_batch(const BatchPlan& plan, const std::vector<LabeledExample>& labeled_pool,
                             const std::vector<UnlabeledExample>& unlabeled_pool,
                             const std::map<std::string, SoftMask>& pseudo_targets,
                             const std::map<std::string, SoftMask>& fg_bias_masks,
                             const AugmentConfig& cfg, RngStream& rng) {
    cfg.validate();
    if (plan.b_l > 0 && labeled_pool.empty())
        throw std::invalid_argument("assemble_batch: labeled pool empty but b_l > 0");
    if (plan.b_u > 0 && unlabeled_pool.empty())
        throw std::invalid_argument("assemble_batch: unlabeled pool empty but b_u > 0");

    TrainingBatch batch;
    batch.crop = cfg.crop;

    for (int slot = 0; slot < plan.b_l; ++slot) {
        RngStream r = rng.derive(static_cast<uint64_t>(slot));
        const auto& ex =
            labeled_pool[static_cast<std::size_t>(r.uniform_int(static_cast<int>(labeled_pool.size())))];
        TrainingItem item;
        item.prov.volume_id = ex.id;
        item.prov.labeled = true;
        auto [img, msk] = augment(ex.image, ex.mask, cfg, r, &item.prov.draws);
        const auto offset = draw_crop_offset(msk.data, cfg.crop, cfg.foreground_prob, r, &item.prov.draws);
        item.patch = crop_tensor(img.data, offset, cfg.crop);
        item.target = crop_tensor(msk.data, offset, cfg.crop);
        batch.labeled.push_back(std::move(item));
    }

    for (int slot = 0; slot < plan.b_u; ++slot) {
        RngStream r = rng.derive(static_cast<uint64_t>(plan.b_l + slot));
        const auto& ex = unlabeled_pool[static_cast<std::size_t>(
            r.uniform_int(static_cast<int>(unlabeled_pool.size())))];
        const auto target_it = pseudo_targets.find(ex.id);
        if (target_it == pseudo_targets.end())
            throw std::runtime_error("assemble_batch: missing pseudo-mask for volume " + ex.id);
        const auto bias_it = fg_bias_masks.find(ex.id);
        if (bias_it == fg_bias_masks.end())
            throw std::runtime_error("assemble_batch: missing foreground-bias mask for volume " + ex.id);

        TrainingItem item;
        item.prov.volume_id = ex.id;
        item.prov.labeled = false;
        auto [img, target] = augment(ex.image, target_it->second, cfg, r, &item.prov.draws);
        // bias mask resized with the same draw so its voxels align with the patch
        auto [bias_img, bias] =
            apply_resize_gamma(ex.image.data, bias_it->second.data, item.prov.draws.scale, 1.0);
        (void)bias_img;
        const auto offset = draw_crop_offset(bias, cfg.crop, cfg.foreground_prob, r, &item.prov.draws);
        item.patch = crop_tensor(img.data, offset, cfg.crop);
        item.target = crop_tensor(target.data, offset, cfg.crop);
        batch.unlabeled.push_back(std::move(item));
    }
    return batch;
}

TrainingItem rebuild_item(const ItemProvenance& prov, const Tensor<float>& image,
                          const Tensor<float>& target_mask, std::array<int, 3> crop) {
    TrainingItem item;
    item.prov = prov;
    auto [img, msk] = apply_resize_gamma(image, target_mask, prov.draws.scale, prov.draws.gamma);
    item.patch = crop_tensor(img, prov.draws.offset, crop);
    item.target = crop_tensor(msk, prov.draws.offset, crop);
    return item;
}

}  // namespace coseg
