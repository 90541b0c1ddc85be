#pragma once

#include <memory>
#include <string>
#include <vector>

#include "coseg/core.hpp"
#include "coseg/nn.hpp"

namespace coseg {

// Segmentation-model interfaces. The co-training engine is written against
// these alone; architectures register in the factory below and can be
// swapped via config without engine changes.
//
// forward() is const and keeps per-call state in the caller's Trace, so a
// frozen model may serve concurrent inference. backward() accumulates into
// parameter gradients and must stay single-writer.
template <typename T>
class SegNet2D {
public:
    virtual ~SegNet2D() = default;
    virtual Tensor<T> forward(const Tensor<T>& x, Trace<T>* tr = nullptr) const = 0;  // [C_c,H,W] logits
    virtual void backward(const Tensor<T>& dlogits, Trace<T>& tr) = 0;
    virtual std::vector<Param<T>*> parameters() = 0;
    virtual std::vector<nn::Conv2d<T>*> conv_layers() = 0;
    virtual std::unique_ptr<SegNet2D<T>> clone() const = 0;
    virtual std::string arch() const = 0;
    virtual int in_channels() const = 0;
    virtual int num_classes() const = 0;
};

template <typename T>
class SegNet3D {
public:
    virtual ~SegNet3D() = default;
    virtual Tensor<T> forward(const Tensor<T>& x, Trace<T>* tr = nullptr) const = 0;  // [C_c,H,W,D] logits
    virtual void backward(const Tensor<T>& dlogits, Trace<T>& tr) = 0;
    virtual std::vector<Param<T>*> parameters() = 0;
    virtual std::vector<nn::Conv3d<T>*> conv_layers() = 0;
    virtual std::unique_ptr<SegNet3D<T>> clone() const = 0;
    virtual std::string arch() const = 0;
    virtual int in_channels() const = 0;
    virtual int num_classes() const = 0;
};

// --- 2D reference net: two-level encoder-decoder with skip connection ----------

template <typename T>
class UNet2d final : public SegNet2D<T> {
public:
    UNet2d(int cin, int classes, int width, RngStream& rng) : cin_(cin), classes_(classes), w_(width) {
        RngStream r = rng.derive("unet2d");
        e0a_.configure("e0a", cin, width, 3, Tag::Encoder, false, &r);
        e0b_.configure("e0b", width, width, 3, Tag::Encoder, false, &r);
        b0a_.configure("b0a", width, 2 * width, 3, Tag::Encoder, false, &r);
        b0b_.configure("b0b", 2 * width, 2 * width, 3, Tag::Encoder, false, &r);
        d0a_.configure("d0a", 3 * width, width, 3, Tag::Decoder, false, &r);
        d0b_.configure("d0b", width, width, 3, Tag::Decoder, false, &r);
        head_.configure("head", width, classes, 1, Tag::Decoder, true, nullptr);
    }

    Tensor<T> forward(const Tensor<T>& x, Trace<T>* tr) const override {
        using namespace nn;
        auto a1 = silu_forward(e0a_.forward(x, tr), tr);
        auto a2 = silu_forward(e0b_.forward(a1, tr), tr);
        auto p = avgpool2_2d(a2, tr);
        auto b1 = silu_forward(b0a_.forward(p, tr), tr);
        auto b2 = silu_forward(b0b_.forward(b1, tr), tr);
        auto u = upsample_to_2d(b2, a2.dim(1), a2.dim(2));
        auto cat = concat_channels(a2, u);
        auto d1 = silu_forward(d0a_.forward(cat, tr), tr);
        auto d2 = silu_forward(d0b_.forward(d1, tr), tr);
        return head_.forward(d2, tr);
    }

    void backward(const Tensor<T>& dlogits, Trace<T>& tr) override {
        using namespace nn;
        auto dd2 = head_.backward(dlogits, tr);
        auto dd1 = d0b_.backward(silu_backward(dd2, tr), tr);
        auto dcat = d0a_.backward(silu_backward(dd1, tr), tr);
        auto [da2_skip, du] = split_channels(dcat, w_);
        const int H = dcat.dim(1), W = dcat.dim(2);
        auto db2 = upsample_to_2d_backward(du, pooled_dim(H), pooled_dim(W));
        auto db1 = b0b_.backward(silu_backward(db2, tr), tr);
        auto dp = b0a_.backward(silu_backward(db1, tr), tr);
        auto da2_pool = avgpool2_2d_backward(dp, tr);
        for (std::size_t i = 0; i < da2_skip.size(); ++i) da2_skip[i] += da2_pool[i];
        auto da1 = e0b_.backward(silu_backward(da2_skip, tr), tr);
        e0a_.backward(silu_backward(da1, tr), tr);
    }

    std::vector<Param<T>*> parameters() override {
        std::vector<Param<T>*> out;
        for (auto* c : conv_layers()) c->collect(out);
        return out;
    }
    std::vector<nn::Conv2d<T>*> conv_layers() override {
        return {&e0a_, &e0b_, &b0a_, &b0b_, &d0a_, &d0b_, &head_};
    }
    std::unique_ptr<SegNet2D<T>> clone() const override { return std::make_unique<UNet2d>(*this); }
    std::string arch() const override { return "unet2d"; }
    int in_channels() const override { return cin_; }
    int num_classes() const override { return classes_; }

private:
    int cin_, classes_, w_;
    nn::Conv2d<T> e0a_, e0b_, b0a_, b0b_, d0a_, d0b_, head_;
};

// --- 2D alternate: plain fully-convolutional stack, no downsampling ------------

template <typename T>
class ConvNet2d final : public SegNet2D<T> {
public:
    ConvNet2d(int cin, int classes, int width, RngStream& rng) : cin_(cin), classes_(classes) {
        RngStream r = rng.derive("convnet2d");
        c1_.configure("c1", cin, width, 3, Tag::Encoder, false, &r);
        c2_.configure("c2", width, width, 3, Tag::Encoder, false, &r);
        c3_.configure("c3", width, width, 3, Tag::Decoder, false, &r);
        c4_.configure("c4", width, width, 3, Tag::Decoder, false, &r);
        head_.configure("head", width, classes, 1, Tag::Decoder, true, nullptr);
    }

    Tensor<T> forward(const Tensor<T>& x, Trace<T>* tr) const override {
        using namespace nn;
        auto h1 = silu_forward(c1_.forward(x, tr), tr);
        auto h2 = silu_forward(c2_.forward(h1, tr), tr);
        auto h3 = silu_forward(c3_.forward(h2, tr), tr);
        auto h4 = silu_forward(c4_.forward(h3, tr), tr);
        return head_.forward(h4, tr);
    }

    void backward(const Tensor<T>& dlogits, Trace<T>& tr) override {
        using namespace nn;
        auto d4 = head_.backward(dlogits, tr);
        auto d3 = c4_.backward(silu_backward(d4, tr), tr);
        auto d2 = c3_.backward(silu_backward(d3, tr), tr);
        auto d1 = c2_.backward(silu_backward(d2, tr), tr);
        c1_.backward(silu_backward(d1, tr), tr);
    }

    std::vector<Param<T>*> parameters() override {
        std::vector<Param<T>*> out;
        for (auto* c : conv_layers()) c->collect(out);
        return out;
    }
    std::vector<nn::Conv2d<T>*> conv_layers() override { return {&c1_, &c2_, &c3_, &c4_, &head_}; }
    std::unique_ptr<SegNet2D<T>> clone() const override { return std::make_unique<ConvNet2d>(*this); }
    std::string arch() const override { return "convnet2d"; }
    int in_channels() const override { return cin_; }
    int num_classes() const override { return classes_; }

private:
    int cin_, classes_;
    nn::Conv2d<T> c1_, c2_, c3_, c4_, head_;
};

// --- 3D reference net: two-level encoder-decoder with skip connection ----------

template <typename T>
class UNet3d final : public SegNet3D<T> {
public:
    UNet3d(int cin, int classes, int width, RngStream& rng) : cin_(cin), classes_(classes), w_(width) {
        RngStream r = rng.derive("unet3d");
        e0_.configure("e0", cin, width, 3, Tag::Encoder, false, &r);
        b0a_.configure("b0a", width, 2 * width, 3, Tag::Encoder, false, &r);
        b0b_.configure("b0b", 2 * width, 2 * width, 3, Tag::Encoder, false, &r);
        d0_.configure("d0", 3 * width, width, 3, Tag::Decoder, false, &r);
        head_.configure("head", width, classes, 1, Tag::Decoder, true, nullptr);
    }

    Tensor<T> forward(const Tensor<T>& x, Trace<T>* tr) const override {
        using namespace nn;
        auto a1 = silu_forward(e0_.forward(x, tr), tr);
        auto p = avgpool2_3d(a1, tr);
        auto b1 = silu_forward(b0a_.forward(p, tr), tr);
        auto b2 = silu_forward(b0b_.forward(b1, tr), tr);
        auto u = upsample_to_3d(b2, a1.dim(1), a1.dim(2), a1.dim(3));
        auto cat = concat_channels(a1, u);
        auto d1 = silu_forward(d0_.forward(cat, tr), tr);
        return head_.forward(d1, tr);
    }

    void backward(const Tensor<T>& dlogits, Trace<T>& tr) override {
        using namespace nn;
        auto dd1 = head_.backward(dlogits, tr);
        auto dcat = d0_.backward(silu_backward(dd1, tr), tr);
        auto [da1_skip, du] = split_channels(dcat, w_);
        const int H = dcat.dim(1), W = dcat.dim(2), D = dcat.dim(3);
        auto db2 = upsample_to_3d_backward(du, pooled_dim(H), pooled_dim(W), pooled_dim(D));
        auto db1 = b0b_.backward(silu_backward(db2, tr), tr);
        auto dp = b0a_.backward(silu_backward(db1, tr), tr);
        auto da1_pool = avgpool2_3d_backward(dp, tr);
        for (std::size_t i = 0; i < da1_skip.size(); ++i) da1_skip[i] += da1_pool[i];
        e0_.backward(silu_backward(da1_skip, tr), tr);
    }

    std::vector<Param<T>*> parameters() override {
        std::vector<Param<T>*> out;
        for (auto* c : conv_layers()) c->collect(out);
        return out;
    }
    std::vector<nn::Conv3d<T>*> conv_layers() override { return {&e0_, &b0a_, &b0b_, &d0_, &head_}; }
    std::unique_ptr<SegNet3D<T>> clone() const override { return std::make_unique<UNet3d>(*this); }
    std::string arch() const override { return "unet3d"; }
    int in_channels() const override { return cin_; }
    int num_classes() const override { return classes_; }

private:
    int cin_, classes_, w_;
    nn::Conv3d<T> e0_, b0a_, b0b_, d0_, head_;
};

// --- 3D alternate: residual stack at full resolution ----------------------------

template <typename T>
class ResNet3d final : public SegNet3D<T> {
public:
    ResNet3d(int cin, int classes, int width, RngStream& rng) : cin_(cin), classes_(classes) {
        RngStream r = rng.derive("resnet3d");
        stem_.configure("stem", cin, width, 3, Tag::Encoder, false, &r);
        r1a_.configure("r1a", width, width, 3, Tag::Encoder, false, &r);
        r1b_.configure("r1b", width, width, 3, Tag::Encoder, false, &r);
        r2a_.configure("r2a", width, width, 3, Tag::Decoder, false, &r);
        r2b_.configure("r2b", width, width, 3, Tag::Decoder, false, &r);
        head_.configure("head", width, classes, 1, Tag::Decoder, true, nullptr);
    }

    Tensor<T> forward(const Tensor<T>& x, Trace<T>* tr) const override {
        using namespace nn;
        auto s = silu_forward(stem_.forward(x, tr), tr);
        auto y1 = block_fwd(r1a_, r1b_, s, tr);
        auto y2 = block_fwd(r2a_, r2b_, y1, tr);
        return head_.forward(y2, tr);
    }

    void backward(const Tensor<T>& dlogits, Trace<T>& tr) override {
        using namespace nn;
        auto dy2 = head_.backward(dlogits, tr);
        auto dy1 = block_bwd(r2a_, r2b_, dy2, tr);
        auto ds = block_bwd(r1a_, r1b_, dy1, tr);
        stem_.backward(silu_backward(ds, tr), tr);
    }

    std::vector<Param<T>*> parameters() override {
        std::vector<Param<T>*> out;
        for (auto* c : conv_layers()) c->collect(out);
        return out;
    }
    std::vector<nn::Conv3d<T>*> conv_layers() override {
        return {&stem_, &r1a_, &r1b_, &r2a_, &r2b_, &head_};
    }
    std::unique_ptr<SegNet3D<T>> clone() const override { return std::make_unique<ResNet3d>(*this); }
    std::string arch() const override { return "resnet3d"; }
    int in_channels() const override { return cin_; }
    int num_classes() const override { return classes_; }

private:
    // y = silu(x + cb(silu(ca(x))))
    static Tensor<T> block_fwd(const nn::Conv3d<T>& ca, const nn::Conv3d<T>& cb, const Tensor<T>& x,
                               Trace<T>* tr) {
        using namespace nn;
        auto t = silu_forward(ca.forward(x, tr), tr);
        auto u = cb.forward(t, tr);
        for (std::size_t i = 0; i < u.size(); ++i) u[i] += x[i];
        return silu_forward(u, tr);
    }
    static Tensor<T> block_bwd(nn::Conv3d<T>& ca, nn::Conv3d<T>& cb, const Tensor<T>& dy, Trace<T>& tr) {
        using namespace nn;
        auto dsum = silu_backward(dy, tr);
        auto dt = cb.backward(dsum, tr);
        auto dx = ca.backward(silu_backward(dt, tr), tr);
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dsum[i];
        return dx;
    }

    int cin_, classes_;
    nn::Conv3d<T> stem_, r1a_, r1b_, r2a_, r2b_, head_;
};

// --- factory --------------------------------------------------------------------

inline const std::vector<std::string>& registered_archs_2d() {
    static const std::vector<std::string> a = {"unet2d", "convnet2d"};
    return a;
}
inline const std::vector<std::string>& registered_archs_3d() {
    static const std::vector<std::string> a = {"unet3d", "resnet3d"};
    return a;
}

template <typename T>
std::unique_ptr<SegNet2D<T>> make_model2d(const std::string& arch, int cin, int classes, int width,
                                          RngStream& rng) {
    if (arch == "unet2d") return std::make_unique<UNet2d<T>>(cin, classes, width, rng);
    if (arch == "convnet2d") return std::make_unique<ConvNet2d<T>>(cin, classes, width, rng);
    throw std::invalid_argument("unknown 2D architecture: " + arch);
}

template <typename T>
std::unique_ptr<SegNet3D<T>> make_model3d(const std::string& arch, int cin, int classes, int width,
                                          RngStream& rng) {
    if (arch == "unet3d") return std::make_unique<UNet3d<T>>(cin, classes, width, rng);
    if (arch == "resnet3d") return std::make_unique<ResNet3d<T>>(cin, classes, width, rng);
    throw std::invalid_argument("unknown 3D architecture: " + arch);
}

// --- model-level prediction helpers ----------------------------------------------

// Per-slice softmax prediction assembled over depth (gradient-free: the
// pseudo-mask generation path). The training path with gradients through all
// slices lives in the co-training engine.
template <typename T>
Tensor<T> predict_mask_2d_volume_t(const SegNet2D<T>& model, const Tensor<T>& vol) {
    auto slices = extract_slices_t(vol);
    std::vector<Tensor<T>> probs;
    probs.reserve(slices.size());
    for (auto& s : slices) probs.push_back(nn::softmax_classes(model.forward(s, nullptr)));
    return concat_depth(probs);
}

inline SoftMask predict_mask_2d_volume(const SegNet2D<float>& model, const Volume& v) {
    return SoftMask(predict_mask_2d_volume_t(model, v.data));
}

// Full-volume softmax prediction by the 3D model (gradient-free).
template <typename T>
Tensor<T> predict_mask_3d_t(const SegNet3D<T>& model, const Tensor<T>& vol) {
    return nn::softmax_classes(model.forward(vol, nullptr));
}

inline SoftMask predict_mask_3d(const SegNet3D<float>& model, const Volume& v) {
    return SoftMask(predict_mask_3d_t(model, v.data));
}

template <typename T, typename Net>
std::size_t parameter_count(Net& net) {
    std::size_t n = 0;
    for (auto* p : net.parameters()) n += p->value.size();
    return n;
}

}  // namespace coseg
