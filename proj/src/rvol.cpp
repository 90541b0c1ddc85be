#include "coseg/rvol.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace coseg {

namespace {

void byteswap_floats(std::vector<char>& bytes) {
    for (std::size_t i = 0; i + 3 < bytes.size(); i += 4) {
        std::swap(bytes[i], bytes[i + 3]);
        std::swap(bytes[i + 1], bytes[i + 2]);
    }
}

}  // namespace

void write_rvol(const std::filesystem::path& path, const Tensor<float>& data, const RvolHeader& header) {
    if (data.rank() != 4) throw std::invalid_argument("write_rvol: rank-4 tensor required");
    if (data.dim(0) != header.channels || data.dim(1) != header.dims[0] || data.dim(2) != header.dims[1] ||
        data.dim(3) != header.dims[2])
        throw std::invalid_argument("write_rvol: header dims disagree with tensor shape");

    nlohmann::json h;
    h["kind"] = header.kind;
    h["channels"] = header.channels;
    h["dims"] = header.dims;
    h["dtype"] = "float32";
    h["byte_order"] = "little-endian";
    h["spacing"] = header.spacing;
    h["provenance"] = header.provenance;

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_rvol: cannot open " + path.string());
    out << "RVOL 1\n" << h.dump() << "\n";

    std::vector<char> bytes(data.size() * sizeof(float));
    std::memcpy(bytes.data(), data.data(), bytes.size());
    if constexpr (std::endian::native == std::endian::big) byteswap_floats(bytes);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write_rvol: write failed for " + path.string());
}

std::pair<Tensor<float>, RvolHeader> read_rvol(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_rvol: cannot open " + path.string());
    std::string magic, header_line;
    std::getline(in, magic);
    if (magic != "RVOL 1") throw std::runtime_error("read_rvol: bad magic in " + path.string());
    std::getline(in, header_line);
    nlohmann::json h = nlohmann::json::parse(header_line);
    if (h.value("dtype", "") != "float32") throw std::runtime_error("read_rvol: unsupported dtype");
    if (h.value("byte_order", "") != "little-endian")
        throw std::runtime_error("read_rvol: unsupported byte order");

    RvolHeader header;
    header.kind = h.value("kind", "volume");
    header.channels = h.at("channels").get<int>();
    header.dims = h.at("dims").get<std::array<int, 3>>();
    header.spacing = h.value("spacing", std::array<float, 3>{1.f, 1.f, 1.f});
    header.provenance = h.value("provenance", nlohmann::json::object());

    Tensor<float> data({header.channels, header.dims[0], header.dims[1], header.dims[2]});
    std::vector<char> bytes(data.size() * sizeof(float));
    in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
        throw std::runtime_error("read_rvol: truncated payload in " + path.string());
    if constexpr (std::endian::native == std::endian::big) byteswap_floats(bytes);
    std::memcpy(data.data(), bytes.data(), bytes.size());
    return {std::move(data), std::move(header)};
}

void write_volume(const std::filesystem::path& path, const Volume& v, const nlohmann::json& provenance) {
    RvolHeader h;
    h.kind = "volume";
    h.channels = v.channels();
    h.dims = {v.height(), v.width(), v.depth()};
    h.spacing = v.spacing;
    h.provenance = provenance;
    write_rvol(path, v.data, h);
}

Volume read_volume(const std::filesystem::path& path) {
    auto [data, h] = read_rvol(path);
    Volume v;
    v.data = std::move(data);
    v.spacing = h.spacing;
    v.validate();
    return v;
}

void write_softmask(const std::filesystem::path& path, const SoftMask& m, const nlohmann::json& provenance) {
    RvolHeader h;
    h.kind = "softmask";
    h.channels = m.classes();
    h.dims = {m.height(), m.width(), m.depth()};
    h.provenance = provenance;
    write_rvol(path, m.data, h);
}

SoftMask read_softmask(const std::filesystem::path& path) {
    auto [data, h] = read_rvol(path);
    if (h.kind != "softmask") throw std::runtime_error("read_softmask: kind is '" + h.kind + "'");
    return SoftMask(std::move(data));
}

void write_labels(const std::filesystem::path& path, const Tensor<int>& labels,
                  const nlohmann::json& provenance) {
    if (labels.rank() != 3) throw std::invalid_argument("write_labels: rank-3 [H,W,D] labels required");
    Tensor<float> data({1, labels.dim(0), labels.dim(1), labels.dim(2)});
    for (std::size_t i = 0; i < labels.size(); ++i) data[i] = static_cast<float>(labels[i]);
    RvolHeader h;
    h.kind = "labels";
    h.channels = 1;
    h.dims = {labels.dim(0), labels.dim(1), labels.dim(2)};
    h.provenance = provenance;
    write_rvol(path, data, h);
}

}  // namespace coseg
