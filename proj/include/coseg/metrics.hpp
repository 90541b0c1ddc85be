#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "coseg/tensor.hpp"

namespace coseg {

// Thrown when surface distances are requested for an empty mask; evaluate()
// catches it, excludes the volume from distance aggregates and warns.
struct EmptyMaskError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class AsdVariant { Pooled, MeanOfMeans };

AsdVariant asd_variant_from_string(const std::string& s);

// dice = 2|A∩B|/(|A|+|B|), jaccard = |A∩B|/|A∪B| on binary volumes. Both 1
// when both masks are empty, 0 when exactly one is.
std::pair<double, double> overlap_metrics(const Tensor<int>& pred, const Tensor<int>& gt);

// Surface voxels: foreground with a six-connected background neighbor (the
// volume boundary counts as background). Distances are exact Euclidean
// nearest-surface distances in voxel units (or mm if spacing is given).
// hd95 = max of the two directed 95th percentiles (linear interpolation
// between order statistics); asd = mean of the pooled directed distances
// (or mean of the two directed means for MeanOfMeans).
std::pair<double, double> surface_distances(const Tensor<int>& pred, const Tensor<int>& gt,
                                            AsdVariant variant = AsdVariant::Pooled,
                                            std::array<double, 3> spacing = {1.0, 1.0, 1.0});

// Directed distance multiset from surface(a) to surface(b); exposed for the
// oracle comparison tests.
std::vector<double> directed_surface_distances(const Tensor<int>& a, const Tensor<int>& b,
                                               std::array<double, 3> spacing = {1.0, 1.0, 1.0});

std::vector<std::array<int, 3>> surface_voxels(const Tensor<int>& mask);

// Linear-interpolation percentile (rank = q*(n-1)).
double percentile(std::vector<double> values, double q);

struct VolumeMetricsRow {
    std::string id;
    int cls = 1;
    double dice = 0, jaccard = 0;
    double hd95 = 0, asd = 0;
    bool surface_defined = true;
};

struct MetricReport {
    std::vector<VolumeMetricsRow> per_volume;
    double mean_dice = 0, std_dice = 0;
    double mean_jaccard = 0, std_jaccard = 0;
    double mean_hd95 = 0, std_hd95 = 0;
    double mean_asd = 0, std_asd = 0;
    int surface_excluded = 0;
};

// Per-volume metrics for every foreground class, plus mean/std aggregates.
MetricReport evaluate(const std::vector<Tensor<int>>& preds, const std::vector<Tensor<int>>& gts,
                      const std::vector<std::string>& ids, int classes,
                      AsdVariant variant = AsdVariant::Pooled,
                      std::array<double, 3> spacing = {1.0, 1.0, 1.0});

void write_metrics_csv(const MetricReport& report, const std::filesystem::path& path);

}  // namespace coseg
