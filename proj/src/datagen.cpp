#include "coseg/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace coseg {

TargetFamily target_family_from_string(const std::string& s) {
    if (s == "ellipsoid") return TargetFamily::Ellipsoid;
    if (s == "two-lobe-blob") return TargetFamily::TwoLobeBlob;
    throw std::invalid_argument("unknown target family: " + s);
}

std::string to_string(TargetFamily f) {
    return f == TargetFamily::Ellipsoid ? "ellipsoid" : "two-lobe-blob";
}

SourceFamily source_family_from_string(const std::string& s) {
    if (s == "polygons") return SourceFamily::Polygons;
    if (s == "discs") return SourceFamily::Discs;
    throw std::invalid_argument("unknown source family: " + s);
}

std::string to_string(SourceFamily f) { return f == SourceFamily::Polygons ? "polygons" : "discs"; }

void TargetDatasetSpec::validate() const {
    if (n < 1 || n >= m) throw std::invalid_argument("TargetDatasetSpec: need 1 <= n < m");
    for (int s : shape)
        if (s < 4) throw std::invalid_argument("TargetDatasetSpec: each dimension must be >= 4");
    if (classes != 2) throw std::invalid_argument("TargetDatasetSpec: only classes=2 is supported");
    if (noise_sigma < 0) throw std::invalid_argument("TargetDatasetSpec: noise_sigma must be >= 0");
    if (test_count < 1) throw std::invalid_argument("TargetDatasetSpec: test_count must be >= 1");
}

nlohmann::json TargetDatasetSpec::to_json() const {
    return nlohmann::json{{"m", m},
                          {"n", n},
                          {"shape", shape},
                          {"classes", classes},
                          {"family", coseg::to_string(family)},
                          {"noise_sigma", noise_sigma},
                          {"texture_freq", texture_freq},
                          {"seed", seed},
                          {"test_count", test_count},
                          {"fg_offset", fg_offset},
                          {"texture_amp", texture_amp}};
}

TargetDatasetSpec TargetDatasetSpec::from_json(const nlohmann::json& j) {
    TargetDatasetSpec s;
    s.m = j.at("m").get<int>();
    s.n = j.at("n").get<int>();
    s.shape = j.at("shape").get<std::array<int, 3>>();
    s.classes = j.at("classes").get<int>();
    s.family = target_family_from_string(j.at("family").get<std::string>());
    s.noise_sigma = j.at("noise_sigma").get<double>();
    s.texture_freq = j.at("texture_freq").get<double>();
    s.seed = j.at("seed").get<uint64_t>();
    s.test_count = j.value("test_count", 8);
    s.fg_offset = j.value("fg_offset", 0.35);
    s.texture_amp = j.value("texture_amp", 0.5);
    return s;
}

uint64_t TargetDatasetSpec::hash() const { return detail::fnv1a64(to_json().dump()); }

void SourceDatasetSpec::validate() const {
    if (count < 1) throw std::invalid_argument("SourceDatasetSpec: count must be >= 1");
    for (int s : shape)
        if (s < 4) throw std::invalid_argument("SourceDatasetSpec: each dimension must be >= 4");
    if (classes != 2) throw std::invalid_argument("SourceDatasetSpec: only classes=2 is supported");
}

// --- rasterizers ----------------------------------------------------------------

Tensor<int> rasterize_ellipsoid(std::array<int, 3> dims, std::array<double, 3> center,
                                std::array<double, 3> semiaxes) {
    for (double a : semiaxes)
        if (a <= 0) throw std::invalid_argument("rasterize_ellipsoid: semiaxes must be positive");
    Tensor<int> out({dims[0], dims[1], dims[2]}, 0);
    for (int h = 0; h < dims[0]; ++h)
        for (int w = 0; w < dims[1]; ++w)
            for (int d = 0; d < dims[2]; ++d) {
                const double x = (h - center[0]) / semiaxes[0];
                const double y = (w - center[1]) / semiaxes[1];
                const double z = (d - center[2]) / semiaxes[2];
                if (x * x + y * y + z * z <= 1.0)
                    out[(static_cast<std::size_t>(h) * dims[1] + w) * dims[2] + d] = 1;
            }
    return out;
}

Tensor<int> rasterize_two_lobe(std::array<int, 3> dims, std::array<double, 3> c1,
                               std::array<double, 3> a1, std::array<double, 3> c2,
                               std::array<double, 3> a2) {
    Tensor<int> m1 = rasterize_ellipsoid(dims, c1, a1);
    Tensor<int> m2 = rasterize_ellipsoid(dims, c2, a2);
    for (std::size_t i = 0; i < m1.size(); ++i) m1[i] = (m1[i] | m2[i]);
    return m1;
}

Tensor<int> rasterize_disc(std::array<int, 2> dims, std::array<double, 2> center, double radius) {
    if (radius <= 0) throw std::invalid_argument("rasterize_disc: radius must be positive");
    Tensor<int> out({dims[0], dims[1]}, 0);
    for (int h = 0; h < dims[0]; ++h)
        for (int w = 0; w < dims[1]; ++w) {
            const double x = h - center[0];
            const double y = w - center[1];
            if (x * x + y * y <= radius * radius) out[static_cast<std::size_t>(h) * dims[1] + w] = 1;
        }
    return out;
}

Tensor<int> rasterize_convex_polygon(std::array<int, 2> dims,
                                     const std::vector<std::array<double, 2>>& v) {
    if (v.size() < 3) throw std::invalid_argument("rasterize_convex_polygon: need >= 3 vertices");
    Tensor<int> out({dims[0], dims[1]}, 0);
    const int nv = static_cast<int>(v.size());
    for (int h = 0; h < dims[0]; ++h)
        for (int w = 0; w < dims[1]; ++w) {
            bool pos = false, neg = false;
            for (int i = 0; i < nv; ++i) {
                const auto& p = v[static_cast<std::size_t>(i)];
                const auto& q = v[static_cast<std::size_t>((i + 1) % nv)];
                const double cross = (q[0] - p[0]) * (w - p[1]) - (q[1] - p[1]) * (h - p[0]);
                if (cross > 0) pos = true;
                if (cross < 0) neg = true;
            }
            if (!(pos && neg)) out[static_cast<std::size_t>(h) * dims[1] + w] = 1;
        }
    return out;
}

// --- target generation -----------------------------------------------------------

namespace {

constexpr double kTwoPi = 6.28318530717958647692;
constexpr double kFgFracLo = 0.02;
constexpr double kFgFracHi = 0.40;

struct TextureField {
    // few low-frequency sinusoids: amp_j * sin(2*pi*f_j*(u_j . x)/maxdim + phase_j)
    std::array<double, 3> amp{};
    std::array<std::array<double, 3>, 3> dir{};
    std::array<double, 3> freq{};
    std::array<double, 3> phase{};

    static TextureField draw(RngStream& rng, double total_amp, double base_freq) {
        TextureField t;
        for (int j = 0; j < 3; ++j) {
            t.amp[j] = total_amp / 3.0 * rng.uniform(0.5, 1.0);
            double nx = rng.normal(), ny = rng.normal(), nz = rng.normal();
            const double norm = std::sqrt(nx * nx + ny * ny + nz * nz) + 1e-12;
            t.dir[j] = {nx / norm, ny / norm, nz / norm};
            t.freq[j] = base_freq * rng.uniform(0.5, 1.5);
            t.phase[j] = rng.uniform(0.0, kTwoPi);
        }
        return t;
    }

    double at(double h, double w, double d, double maxdim) const {
        double v = 0.0;
        for (int j = 0; j < 3; ++j) {
            const double proj = t_dot(dir[j], h, w, d);
            v += amp[j] * std::sin(kTwoPi * freq[j] * proj / maxdim + phase[j]);
        }
        return v;
    }

    static double t_dot(const std::array<double, 3>& u, double h, double w, double d) {
        return u[0] * h + u[1] * w + u[2] * d;
    }
};

double fg_fraction(const Tensor<int>& mask) {
    std::size_t fg = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) fg += static_cast<std::size_t>(mask[i]);
    return static_cast<double>(fg) / static_cast<double>(mask.size());
}

// Draw shape params until the rasterized foreground fraction lands in
// [2%, 40%]; record the accepted params.
Tensor<int> draw_target_mask(const TargetDatasetSpec& spec, RngStream& rng, nlohmann::json& params_out) {
    const auto& dims = spec.shape;
    for (int attempt = 0; attempt < 64; ++attempt) {
        std::array<double, 3> c1, a1;
        for (int ax = 0; ax < 3; ++ax) {
            c1[ax] = rng.uniform(0.30, 0.70) * (dims[ax] - 1);
            a1[ax] = rng.uniform(0.35, 0.75) * dims[ax] / 2.0;
        }
        Tensor<int> mask;
        nlohmann::json params;
        if (spec.family == TargetFamily::Ellipsoid) {
            mask = rasterize_ellipsoid(dims, c1, a1);
            params = {{"family", "ellipsoid"}, {"center", c1}, {"semiaxes", a1}};
        } else {
            std::array<double, 3> c2, a2;
            double nx = rng.normal(), ny = rng.normal(), nz = rng.normal();
            const double norm = std::sqrt(nx * nx + ny * ny + nz * nz) + 1e-12;
            const double sep = 0.8 * (a1[0] + a1[1] + a1[2]) / 3.0;
            c2 = {c1[0] + sep * nx / norm, c1[1] + sep * ny / norm, c1[2] + sep * nz / norm};
            for (int ax = 0; ax < 3; ++ax) a2[ax] = a1[ax] * rng.uniform(0.5, 0.9);
            mask = rasterize_two_lobe(dims, c1, a1, c2, a2);
            params = {{"family", "two-lobe-blob"}, {"center", c1},  {"semiaxes", a1},
                      {"center2", c2},             {"semiaxes2", a2}};
        }
        const double frac = fg_fraction(mask);
        if (frac >= kFgFracLo && frac <= kFgFracHi) {
            params["fg_fraction"] = frac;
            params_out = std::move(params);
            return mask;
        }
    }
    throw std::runtime_error("draw_target_mask: no admissible shape after 64 attempts");
}

TargetItem make_target_item(const TargetDatasetSpec& spec, const std::string& id, RngStream rng) {
    const auto& dims = spec.shape;
    const double maxdim = static_cast<double>(std::max({dims[0], dims[1], dims[2]}));

    nlohmann::json params;
    Tensor<int> mask = draw_target_mask(spec, rng, params);
    const TextureField tex = TextureField::draw(rng, spec.texture_amp, spec.texture_freq);

    Tensor<float> raw({1, dims[0], dims[1], dims[2]});
    std::size_t idx = 0;
    for (int h = 0; h < dims[0]; ++h)
        for (int w = 0; w < dims[1]; ++w)
            for (int d = 0; d < dims[2]; ++d, ++idx) {
                double v = tex.at(h, w, d, maxdim);
                v += spec.fg_offset * mask[idx];
                v += spec.noise_sigma * rng.normal();
                raw[idx] = static_cast<float>(v);
            }

    // normalize to [0,1]
    float mn = raw[0], mx = raw[0];
    for (std::size_t i = 0; i < raw.size(); ++i) {
        mn = std::min(mn, raw[i]);
        mx = std::max(mx, raw[i]);
    }
    const float span = (mx - mn) > 1e-12f ? (mx - mn) : 1.f;
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = (raw[i] - mn) / span;

    TargetItem item;
    item.id = id;
    item.image = Volume(std::move(raw));
    item.mask = one_hot(mask, spec.classes);
    item.shape_params = std::move(params);
    return item;
}

}  // namespace

TargetDataset generate_target(const TargetDatasetSpec& spec) {
    spec.validate();
    RngStream base(spec.seed, "datagen-target");
    const RngStream train = base.derive("train");
    const RngStream test = base.derive("test");

    TargetDataset ds;
    for (int i = 0; i < spec.m; ++i) {
        char id[32];
        std::snprintf(id, sizeof(id), "vol%04d", i);
        TargetItem item = make_target_item(spec, id, train.derive(static_cast<uint64_t>(i)));
        if (i < spec.n)
            ds.labeled.push_back(std::move(item));
        else
            ds.unlabeled.push_back(std::move(item));
    }
    for (int i = 0; i < spec.test_count; ++i) {
        char id[32];
        std::snprintf(id, sizeof(id), "test%04d", i);
        ds.test.push_back(make_target_item(spec, id, test.derive(static_cast<uint64_t>(i))));
    }
    return ds;
}

// --- source generation -------------------------------------------------------------

namespace {

Tensor<int> draw_source_mask(const SourceDatasetSpec& spec, RngStream& rng) {
    const auto& dims = spec.shape;
    const double mind = static_cast<double>(std::min(dims[0], dims[1]));
    for (int attempt = 0; attempt < 64; ++attempt) {
        Tensor<int> mask;
        if (spec.family == SourceFamily::Discs) {
            std::array<double, 2> c{rng.uniform(0.30, 0.70) * (dims[0] - 1),
                                    rng.uniform(0.30, 0.70) * (dims[1] - 1)};
            const double r = rng.uniform(0.12, 0.32) * mind;
            mask = rasterize_disc(dims, c, r);
        } else {
            const int nv = 3 + rng.uniform_int(4);  // 3..6 vertices
            std::array<double, 2> c{rng.uniform(0.35, 0.65) * (dims[0] - 1),
                                    rng.uniform(0.35, 0.65) * (dims[1] - 1)};
            std::vector<double> angles(static_cast<std::size_t>(nv));
            for (auto& a : angles) a = rng.uniform(0.0, kTwoPi);
            std::sort(angles.begin(), angles.end());
            std::vector<std::array<double, 2>> verts;
            for (double a : angles) {
                const double r = rng.uniform(0.15, 0.35) * mind;
                verts.push_back({c[0] + r * std::cos(a), c[1] + r * std::sin(a)});
            }
            mask = rasterize_convex_polygon(dims, verts);
        }
        const double frac = fg_fraction(mask);
        if (frac >= kFgFracLo && frac <= kFgFracHi) return mask;
    }
    throw std::runtime_error("draw_source_mask: no admissible shape after 64 attempts");
}

}  // namespace

std::vector<SourceItem> generate_source(const SourceDatasetSpec& spec) {
    spec.validate();
    RngStream base(spec.seed, "datagen-source");
    std::vector<SourceItem> out;
    out.reserve(static_cast<std::size_t>(spec.count));
    const auto& dims = spec.shape;
    for (int i = 0; i < spec.count; ++i) {
        RngStream rng = base.derive(static_cast<uint64_t>(i));
        Tensor<int> mask = draw_source_mask(spec, rng);

        // source texture: random linear ramp background (flat statistics,
        // unlike the target's sinusoid fields) + offset + noise
        const double gx = rng.uniform(-0.4, 0.4);
        const double gy = rng.uniform(-0.4, 0.4);
        const double bias = rng.uniform(0.2, 0.5);
        Tensor<float> raw({1, dims[0], dims[1]});
        std::size_t idx = 0;
        for (int h = 0; h < dims[0]; ++h)
            for (int w = 0; w < dims[1]; ++w, ++idx) {
                double v = bias + gx * (static_cast<double>(h) / dims[0]) +
                           gy * (static_cast<double>(w) / dims[1]);
                v += spec.fg_offset * mask[idx];
                v += spec.noise_sigma * rng.normal();
                raw[idx] = static_cast<float>(v);
            }
        float mn = raw[0], mx = raw[0];
        for (std::size_t j = 0; j < raw.size(); ++j) {
            mn = std::min(mn, raw[j]);
            mx = std::max(mx, raw[j]);
        }
        const float span = (mx - mn) > 1e-12f ? (mx - mn) : 1.f;
        for (std::size_t j = 0; j < raw.size(); ++j) raw[j] = (raw[j] - mn) / span;

        SourceItem item;
        item.image = Slice(std::move(raw));
        Tensor<float> onehot({spec.classes, dims[0], dims[1]}, 0.f);
        for (std::size_t j = 0; j < mask.size(); ++j)
            onehot[static_cast<std::size_t>(mask[j]) * mask.size() + j] = 1.f;
        item.mask = std::move(onehot);
        out.push_back(std::move(item));
    }
    return out;
}

// --- dataset on disk -----------------------------------------------------------------

std::filesystem::path write_dataset(const TargetDataset& ds, const TargetDatasetSpec& spec,
                                    const std::filesystem::path& dir, bool write_unlabeled_masks) {
    std::filesystem::create_directories(dir);
    nlohmann::json entries = nlohmann::json::array();

    auto emit = [&](const TargetItem& item, const std::string& role, bool with_mask) {
        nlohmann::json prov{{"dataset_seed", spec.seed}, {"id", item.id}, {"shape_params", item.shape_params}};
        const std::string img = item.id + "_img.rvol";
        write_volume(dir / img, item.image, prov);
        std::string msk;
        if (with_mask) {
            msk = item.id + "_mask.rvol";
            write_softmask(dir / msk, item.mask, prov);
        }
        entries.push_back({{"id", item.id}, {"role", role}, {"image", img}, {"mask", msk}});
    };

    for (const auto& it : ds.labeled) emit(it, "labeled", true);
    for (const auto& it : ds.unlabeled) emit(it, "unlabeled", write_unlabeled_masks);
    for (const auto& it : ds.test) emit(it, "test", true);

    nlohmann::json manifest{{"format", "coseg-manifest-1"},
                            {"spec", spec.to_json()},
                            {"spec_hash", spec.hash()},
                            {"entries", entries}};
    const auto path = dir / "manifest.json";
    std::ofstream out(path, std::ios::trunc);
    out << manifest.dump(2) << "\n";
    if (!out) throw std::runtime_error("write_dataset: cannot write " + path.string());
    return path;
}

Manifest read_manifest(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("read_manifest: cannot open " + manifest_path.string());
    nlohmann::json j = nlohmann::json::parse(in);
    if (j.value("format", "") != "coseg-manifest-1")
        throw std::runtime_error("read_manifest: unrecognized manifest format");
    Manifest m;
    m.spec_json = j.at("spec");
    m.spec_hash = j.at("spec_hash").get<uint64_t>();
    m.classes = m.spec_json.at("classes").get<int>();
    m.shape = m.spec_json.at("shape").get<std::array<int, 3>>();
    m.base_dir = manifest_path.parent_path();
    for (const auto& e : j.at("entries")) {
        ManifestEntry me;
        me.id = e.at("id").get<std::string>();
        me.role = e.at("role").get<std::string>();
        me.image_file = e.at("image").get<std::string>();
        me.mask_file = e.value("mask", "");
        m.entries.push_back(std::move(me));
    }
    return m;
}

}  // namespace coseg
