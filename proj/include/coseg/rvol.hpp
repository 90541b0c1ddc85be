#pragma once

#include <array>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "coseg/core.hpp"
#include "coseg/tensor.hpp"

namespace coseg {

// RVOL: one-line magic, one-line JSON header (dims, channels, dtype,
// byte-order, spacing, provenance), then raw row-major float32 bytes in
// little-endian order. Round-trips bit-exactly.
struct RvolHeader {
    std::string kind = "volume";  // volume | softmask | labels
    int channels = 1;
    std::array<int, 3> dims{1, 1, 1};  // H, W, D
    std::array<float, 3> spacing{1.f, 1.f, 1.f};
    nlohmann::json provenance = nlohmann::json::object();
};

void write_rvol(const std::filesystem::path& path, const Tensor<float>& data, const RvolHeader& header);
std::pair<Tensor<float>, RvolHeader> read_rvol(const std::filesystem::path& path);

void write_volume(const std::filesystem::path& path, const Volume& v,
                  const nlohmann::json& provenance = nlohmann::json::object());
Volume read_volume(const std::filesystem::path& path);

void write_softmask(const std::filesystem::path& path, const SoftMask& m,
                    const nlohmann::json& provenance = nlohmann::json::object());
SoftMask read_softmask(const std::filesystem::path& path);

// Hard labels stored as a single-channel float32 RVOL with integer values.
void write_labels(const std::filesystem::path& path, const Tensor<int>& labels,
                  const nlohmann::json& provenance = nlohmann::json::object());

}  // namespace coseg
