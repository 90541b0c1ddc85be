#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "coseg/core.hpp"
#include "coseg/rng.hpp"
#include "coseg/schedule.hpp"

namespace coseg {

struct AugmentConfig {
    double scale_min = 0.9, scale_max = 1.1;
    double gamma_min = 0.8, gamma_max = 1.2;
    std::array<int, 3> crop{24, 24, 16};
    double foreground_prob = 0.5;

    void validate() const;
};

// Everything stochastic about one item's augmentation, recorded so the
// patch can be reproduced bit-exactly without redrawing.
struct AugmentDraws {
    double scale = 1.0;
    double gamma = 1.0;
    bool fg_biased = false;  // the biased branch was taken and foreground existed
    std::array<int, 3> offset{0, 0, 0};
};

// Trilinear resize of image and mask by one isotropic scale; gamma contrast
// on the image's [0,1] min-max representation; mask renormalized to the
// simplex after interpolation.
std::pair<Tensor<float>, Tensor<float>> apply_resize_gamma(const Tensor<float>& image,
                                                           const Tensor<float>& mask, double scale,
                                                           double gamma);

std::pair<Volume, SoftMask> augment(const Volume& v, const SoftMask& m, const AugmentConfig& cfg,
                                    RngStream& rng, AugmentDraws* record = nullptr);

// Window choice: with probability p_fg centered on a uniformly drawn voxel
// whose foreground probability exceeds 0.5 (clamped to bounds), else uniform.
// Falls back to uniform when no foreground voxel exists.
std::array<int, 3> draw_crop_offset(const Tensor<float>& fg_bias_mask, std::array<int, 3> crop,
                                    double p_fg, RngStream& rng, AugmentDraws* record = nullptr);

Tensor<float> crop_tensor(const Tensor<float>& t, std::array<int, 3> offset, std::array<int, 3> crop);

std::pair<Tensor<float>, Tensor<float>> crop_foreground_biased(const Tensor<float>& image,
                                                               const Tensor<float>& mask,
                                                               std::array<int, 3> crop, double p_fg,
                                                               RngStream& rng,
                                                               AugmentDraws* record = nullptr);

// --- batch assembly ------------------------------------------------------------

struct LabeledExample {
    std::string id;
    Volume image;
    SoftMask mask;
};

struct UnlabeledExample {
    std::string id;
    Volume image;
};

struct ItemProvenance {
    std::string volume_id;
    bool labeled = true;
    AugmentDraws draws;
    nlohmann::json to_json() const;
};

struct TrainingItem {
    Tensor<float> patch;   // [C_i, h, w, d]
    Tensor<float> target;  // [C_c, h, w, d]: one-hot ground truth or pseudo-mask crop
    ItemProvenance prov;
};

struct TrainingBatch {
    std::vector<TrainingItem> labeled;
    std::vector<TrainingItem> unlabeled;
    std::array<int, 3> crop{0, 0, 0};
};

// Samples b_l labeled and b_u unlabeled volumes uniformly with replacement,
// augments and crops each. Unlabeled items take their training target from
// `pseudo_targets` and their crop bias from `fg_bias_masks` (the 3D model's
// current pseudo-masks).
TrainingBatch assemble_batch(const BatchPlan& plan, const std::vector<LabeledExample>& labeled_pool,
                             const std::vector<UnlabeledExample>& unlabeled_pool,
                             const std::map<std::string, SoftMask>& pseudo_targets,
                             const std::map<std::string, SoftMask>& fg_bias_masks,
                             const AugmentConfig& cfg, RngStream& rng);

// Re-applies recorded draws; reproduces assemble_batch output bit-exactly
// given the same pools and caches.
TrainingItem rebuild_item(const ItemProvenance& prov, const Tensor<float>& image,
                          const Tensor<float>& target_mask, std::array<int, 3> crop);

}  // namespace coseg
