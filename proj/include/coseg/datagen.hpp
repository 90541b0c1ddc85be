#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "coseg/core.hpp"
#include "coseg/rng.hpp"

namespace coseg {

// --- target domain (3D): the labeled/unlabeled/test corpus ---------------------

enum class TargetFamily { Ellipsoid, TwoLobeBlob };

TargetFamily target_family_from_string(const std::string& s);
std::string to_string(TargetFamily f);

struct TargetDatasetSpec {
    int m = 40;  // total train volumes
    int n = 4;   // labeled subset, n << m
    std::array<int, 3> shape{32, 32, 32};
    int classes = 2;
    TargetFamily family = TargetFamily::Ellipsoid;
    double noise_sigma = 0.12;
    double texture_freq = 2.0;
    uint64_t seed = 0;
    int test_count = 8;
    // raw intensity composition before [0,1] normalization
    double fg_offset = 0.35;
    double texture_amp = 0.5;

    void validate() const;
    nlohmann::json to_json() const;
    static TargetDatasetSpec from_json(const nlohmann::json& j);
    uint64_t hash() const;
};

struct TargetItem {
    std::string id;
    Volume image;    // [0,1] intensities
    SoftMask mask;   // one-hot ground truth
    nlohmann::json shape_params;
};

struct TargetDataset {
    std::vector<TargetItem> labeled;
    std::vector<TargetItem> unlabeled;  // masks kept in memory; withheld on disk
    std::vector<TargetItem> test;
};

TargetDataset generate_target(const TargetDatasetSpec& spec);

// --- source domain (2D): proxy corpus for natural-image pretraining ------------

enum class SourceFamily { Polygons, Discs };

SourceFamily source_family_from_string(const std::string& s);
std::string to_string(SourceFamily f);

struct SourceDatasetSpec {
    int count = 200;
    std::array<int, 2> shape{48, 48};
    int classes = 2;
    SourceFamily family = SourceFamily::Discs;
    uint64_t seed = 1;
    double noise_sigma = 0.05;
    double fg_offset = 0.5;

    void validate() const;
};

struct SourceItem {
    Slice image;          // [C_i,H,W], values in [0,1]
    Tensor<float> mask;   // one-hot [C_c,H,W]
};

std::vector<SourceItem> generate_source(const SourceDatasetSpec& spec);

// --- exact shape rasterizers (voxel centers at integer coordinates) ------------

Tensor<int> rasterize_ellipsoid(std::array<int, 3> dims, std::array<double, 3> center,
                                std::array<double, 3> semiaxes);
Tensor<int> rasterize_two_lobe(std::array<int, 3> dims, std::array<double, 3> c1,
                               std::array<double, 3> a1, std::array<double, 3> c2,
                               std::array<double, 3> a2);
Tensor<int> rasterize_disc(std::array<int, 2> dims, std::array<double, 2> center, double radius);
Tensor<int> rasterize_convex_polygon(std::array<int, 2> dims,
                                     const std::vector<std::array<double, 2>>& vertices);

// --- on-disk dataset with manifest ---------------------------------------------

struct ManifestEntry {
    std::string id;
    std::string role;  // labeled | unlabeled | test
    std::string image_file;
    std::string mask_file;  // empty when withheld
};

struct Manifest {
    std::vector<ManifestEntry> entries;
    nlohmann::json spec_json;
    uint64_t spec_hash = 0;
    int classes = 2;
    std::array<int, 3> shape{0, 0, 0};
    std::filesystem::path base_dir;
};

// Writes RVOL files plus manifest.json into `dir`; returns the manifest path.
std::filesystem::path write_dataset(const TargetDataset& ds, const TargetDatasetSpec& spec,
                                    const std::filesystem::path& dir, bool write_unlabeled_masks = false);
Manifest read_manifest(const std::filesystem::path& manifest_path);

}  // namespace coseg
